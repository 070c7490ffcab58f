from ..exceptions import DataError, DrgoError, UsageError


class ModelError(DrgoError):
    """Base error for the backbone, the graph autoencoder and the diffusion stack"""


class NegativeSamplingError(ModelError, DataError):
    """A sampled user has interacted with every item, so no negative exists"""

    def __init__(self, user: int):
        super().__init__(f"user {user} has no non-interacted item to sample as negative")
        self.user = user


class ScheduleError(ModelError, UsageError):
    """Diffusion schedule bounds or step count out of range"""


class TimestepError(ModelError, UsageError):
    """Diffusion step outside 1..T"""


class NodeIndexError(ModelError, IndexError):
    """User or item index out of range for the model"""

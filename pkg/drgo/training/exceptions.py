from typing import Optional

from ..exceptions import DrgoError


class TrainingDivergenceError(DrgoError):
    """Loss or gradient became non-finite; carries where it happened"""

    exit_code = 4

    def __init__(self, epoch: int, batch: Optional[int], reason: str = "non-finite loss"):
        where = f"epoch {epoch}" if batch is None else f"epoch {epoch}, batch {batch}"
        super().__init__(f"training diverged at {where}: {reason}")
        self.epoch = epoch
        self.batch = batch

from ..exceptions import DataError, DrgoError


class EvaluationError(DrgoError):
    """Base error for metrics and experiment harnesses"""


class EmptyPositivesError(EvaluationError, ValueError):
    """Ranking metric requested for a user without positives"""


class VarianceDiagnosticError(EvaluationError, DataError, ValueError):
    """Weighted variance ratio with a zero denominator"""

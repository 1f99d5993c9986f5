"""Per-snapshot arithmetic cost (additions, multiplications) of the LCMV algorithms."""
from fractions import Fraction
import math

from .scenario import ConfigError


def _lcmv_sg(M, D):
    return 3 * M + 1, 3 * M + 2


def _lcmv_rls(M, D):
    return 3 * M**2 - 2 * M + 3, 6 * M**2 + 2 * M + 2


def _rjio_sg(M, D):
    return 3 * D * M + 4 * M + 2 * D - 2, 5 * D * M + 2 * M + 5 * D + 2


def _rjio_rls(M, D):
    return (3 * M**2 - M + 3 + 3 * D**2 - 7 * D + 3,
            7 * M**2 + 3 * M + 7 * D**2 + 10 * D)


def _smi(M, D):
    # 2/3 M^3 is fractional unless 3 | M; counts are rounded up
    cube = Fraction(2, 3) * M**3
    return math.ceil(cube + 3 * M**2), math.ceil(cube + 5 * M**2)


COMPLEXITY = {
    "LCMV-SG": _lcmv_sg,
    "LCMV-RLS": _lcmv_rls,
    "RJIO-SG": _rjio_sg,
    "RJIO-RLS": _rjio_rls,
    "SMI": _smi,
}


def complexity_counts(algorithm, M, D=1):
    """``(additions, multiplications)`` per snapshot for ``algorithm`` at ``(M, D)``."""
    key = algorithm.upper()
    if key not in COMPLEXITY:
        raise ConfigError(f"unknown algorithm {algorithm!r}; choose from {', '.join(COMPLEXITY)}")
    if M < 2 or not 1 <= D <= M:
        raise ConfigError(f"need M >= 2 and 1 <= D <= M, got M={M}, D={D}")
    return COMPLEXITY[key](int(M), int(D))


def complexity_report(M, D):
    return {name: complexity_counts(name, M, D) for name in COMPLEXITY}

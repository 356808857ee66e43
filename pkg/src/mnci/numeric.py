import numpy as np


def as_real(x) -> np.ndarray:
    """Array view in float64, or in long double if it already is one.

    Keeping long double intact lets gradient checks evaluate the same code
    in extended precision.
    """
    a = np.asarray(x)
    if a.dtype == np.longdouble:
        return a
    return a.astype(np.float64, copy=False)

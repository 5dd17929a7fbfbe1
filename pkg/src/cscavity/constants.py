"""Physical constants (SI), taken from scipy.constants."""

import scipy.constants as _const

HBAR = _const.hbar          # J s
C = _const.c                # m / s
EPS0 = _const.epsilon_0     # F / m
KB = _const.k               # J / K
PI = _const.pi
TWO_PI = 2.0 * _const.pi

"""Unit conventions.

All rates and frequencies inside the package are angular (rad/s).  Config
files and CLI flags use ordinary frequencies in Hz (plus seconds, kelvin and
millitesla); the conversion happens exactly once, at the config boundary.

Linewidth conventions used throughout:

* ``kappa`` is the resonator *energy* decay rate, equal to the FWHM of the
  resonator line in angular units; the photon lifetime is ``1/kappa``.
* ``gamma_perp`` is the transverse (coherence) decay rate.  A spin line of
  FWHM ``w`` (angular) corresponds to ``gamma_perp = w / 2`` — the standard
  Lorentzian half-width relation.
"""

import math

TWO_PI = 2.0 * math.pi


def angular(frequency_hz: float) -> float:
    """Convert an ordinary frequency in Hz to an angular rate in rad/s."""
    return TWO_PI * frequency_hz


def ordinary(angular_rate: float) -> float:
    """Convert an angular rate in rad/s back to an ordinary frequency in Hz."""
    return angular_rate / TWO_PI

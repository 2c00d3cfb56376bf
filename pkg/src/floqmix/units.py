"""Unit conversions. All internal quantities are in Hartree atomic units."""

import math

HARTREE_EV = 27.211386245988          # 1 hartree in eV
AU_TIME_FS = 0.024188843265857        # 1 a.u. of time in fs
INTENSITY_AU_WCM2 = 3.50944758e16     # atomic unit of intensity in W/cm^2


def ev_to_hartree(e_ev: float) -> float:
    return e_ev / HARTREE_EV


def hartree_to_ev(e_ha: float) -> float:
    return e_ha * HARTREE_EV


def fs_to_au(t_fs: float) -> float:
    return t_fs / AU_TIME_FS


def au_to_fs(t_au: float) -> float:
    return t_au * AU_TIME_FS


def intensity_to_field(intensity_wcm2: float) -> float:
    """Peak electric-field amplitude (a.u.) for a given intensity in W/cm^2."""
    if intensity_wcm2 < 0:
        raise ValueError("intensity must be non-negative")
    return math.sqrt(intensity_wcm2 / INTENSITY_AU_WCM2)

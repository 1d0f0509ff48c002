"""Energy/time unit bookkeeping.

Energies (frequencies) are always expressed in one declared energy unit and
times in one declared time unit; hbar converts between them.
"""

from .errors import InvalidInputError

HBAR_EV_FS = 0.6582119569

_ENERGY = {"eV": 1.0, "meV": 1e-3}
_TIME = {"fs": 1.0, "ps": 1e3}


def hbar(energy_unit: str = "eV", time_unit: str = "fs") -> float:
    """Return hbar in ``energy_unit * time_unit``.

    >>> round(hbar("meV", "ps"), 10)
    0.6582119569
    """
    try:
        e = _ENERGY[energy_unit]
        t = _TIME[time_unit]
    except KeyError as exc:
        raise InvalidInputError(f"unknown unit {exc.args[0]!r}") from None
    return HBAR_EV_FS / (e * t)


def energy_in_ev(energy_unit: str) -> float:
    return _ENERGY[energy_unit]

"""Physical constants (CODATA via scipy) and unit conversion factors."""

from dataclasses import dataclass

from scipy import constants as _sc


@dataclass(frozen=True)
class PhysicalConstants:
    gamma: float = _sc.physical_constants["electron gyromag. ratio"][0]  # rad/(s T)
    mu0: float = _sc.mu_0  # T m / A
    hbar: float = _sc.hbar  # J s
    e: float = _sc.e  # C
    kB: float = _sc.k  # J / K

    @property
    def gamma_mu0(self):
        """Gyromagnetic ratio times mu0, in m/(A s)."""
        return self.gamma * self.mu0


CONST = PhysicalConstants()

# config unit conversions
NM = 1e-9
PS = 1e-12
FJ = 1e-15
EMU_CM3 = 1e3  # 1 emu/cm^3 = 1e3 A/m

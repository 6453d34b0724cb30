from math import sqrt, pi

from ..errors import ConfigError


class FluidMaterial:
    """Inviscid fluid described by density and bulk modulus"""

    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        self.name = "water"
        self.density = 1000.0  # kg/m³
        self.bulk_modulus = 2.91e9  # Pa

    def init_properties(self):
        if self.density <= 0 or self.bulk_modulus <= 0:
            raise ConfigError(
                f"fluid {self.name!r} needs positive density and bulk modulus, "
                f"got ρ={self.density}, κ={self.bulk_modulus}"
            )
        self.sound_speed = sqrt(self.bulk_modulus / self.density)

    def wavenumber(self, frequency):
        return 2 * pi * frequency / self.sound_speed

    def to_dict(self):
        return {"name": self.name, "density": self.density, "bulk_modulus": self.bulk_modulus}

    def __repr__(self):
        return f"FluidMaterial({self.name!r}, ρ={self.density}, c={self.sound_speed:.2f})"


class ElasticMaterial:
    """Isotropic elastic solid described by density and pressure/shear wave speeds"""

    def __init__(self, config=None):
        # Set default configuration
        self.set_default_config()

        # Update configuration
        if config:
            for attr, val in config.items():
                setattr(self, attr, val)

        # Calculate properties
        self.init_properties()

    def set_default_config(self):
        self.name = "steel"
        self.density = 7850.0  # kg/m³
        self.pressure_speed = 5960.0  # m/s
        self.shear_speed = 3235.0  # m/s

    def init_properties(self):
        if self.density <= 0:
            raise ConfigError(f"solid {self.name!r} needs positive density, got {self.density}")
        if self.shear_speed < 0:
            raise ConfigError(f"solid {self.name!r} has negative shear speed {self.shear_speed}")
        if self.pressure_speed <= self.shear_speed * sqrt(4 / 3):
            raise ConfigError(
                f"solid {self.name!r}: pressure speed {self.pressure_speed} must exceed "
                f"shear speed·sqrt(4/3) = {self.shear_speed * sqrt(4 / 3):.2f} for a positive bulk modulus"
            )
        # Lamé parameters
        self.mu = self.density * self.shear_speed ** 2
        self.lam = self.density * self.pressure_speed ** 2 - 2 * self.mu
        self.bulk_modulus = self.lam + 2 * self.mu / 3

    def wavenumbers(self, frequency):
        """Pressure and shear wavenumbers (k₁, k₂); k₂ is 0 for a shear-free solid"""
        omega = 2 * pi * frequency
        k2 = omega / self.shear_speed if self.shear_speed > 0 else 0.0
        return omega / self.pressure_speed, k2

    def as_fluid(self):
        """Shear-free reduction with the same density and pressure-wave speed"""
        return FluidMaterial({
            "name": f"{self.name}-fluid",
            "density": self.density,
            "bulk_modulus": self.density * self.pressure_speed ** 2,
        })

    def to_dict(self):
        return {
            "name": self.name,
            "density": self.density,
            "pressure_speed": self.pressure_speed,
            "shear_speed": self.shear_speed,
        }

    def __repr__(self):
        return (
            f"ElasticMaterial({self.name!r}, ρ={self.density}, "
            f"c1={self.pressure_speed}, c2={self.shear_speed})"
        )


WATER = FluidMaterial({"name": "water", "density": 1000.0, "bulk_modulus": 2.91e9})
# Steel as a fluid (density, bulk modulus); the scalar solver uses only its sound speed
STEEL = FluidMaterial({"name": "steel", "density": 7850.0, "bulk_modulus": 201e9})
STEEL_ELASTIC = ElasticMaterial({
    "name": "steel", "density": 7850.0, "pressure_speed": 5960.0, "shear_speed": 3235.0,
})
ALUMINUM_ELASTIC = ElasticMaterial({
    "name": "aluminum", "density": 2700.0, "pressure_speed": 6420.0, "shear_speed": 3040.0,
})

ELASTIC_PRESETS = {"steel": STEEL_ELASTIC, "aluminum": ALUMINUM_ELASTIC}


def density_matched(fluid, background):
    """Copy of fluid whose density equals the background's, keeping its sound speed"""
    return FluidMaterial({
        "name": f"{fluid.name}-matched",
        "density": background.density,
        "bulk_modulus": background.density * fluid.sound_speed ** 2,
    })

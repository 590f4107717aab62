import logging
from dataclasses import asdict, dataclass
from typing import Dict, Tuple

import numpy as np

from distributed_safe_bo.errors import ConfigError, NumericalError

logger = logging.getLogger(__name__)

GRAVITY = 9.81
AIR_DENSITY = 1.225

# Sampling ranges of the heavy-duty vehicle parameters.
PARAM_RANGES: Dict[str, Tuple[float, float]] = {
    "wheel_radius": (0.4, 0.6),
    "rolling_coeff": (4e-3, 8e-3),
    "frontal_area": (5., 7.),
    "drag_coeff": (0.4, 0.8),
    "mass": (1950., 2050.),
}


@dataclass(frozen=True)
class VehicleParams:
    """
    Longitudinal parameters of one vehicle.

    Args:
        wheel_radius: r in meters.
        rolling_coeff: rolling resistance coefficient c_R.
        frontal_area: A_f in square meters.
        drag_coeff: aerodynamic drag coefficient C_D.
        mass: m in kilograms.
    """

    wheel_radius: float
    rolling_coeff: float
    frontal_area: float
    drag_coeff: float
    mass: float

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"vehicle parameter {name} must be positive, got {value}", name)

    @classmethod
    def sample(cls, rng: np.random.Generator, spread: float = 1.) -> "VehicleParams":
        """
        Draws every parameter uniformly, in declaration order, from the central `spread` share of its range.

        Args:
            rng: random generator.
            spread: fraction in [0, 1] of each range; 1 uses the full range, 0 returns the midpoints.
        """
        if not 0. <= spread <= 1.:
            raise ConfigError(f"spread must lie in [0, 1], got {spread}", "spread")
        values = {}
        for name, (low, high) in PARAM_RANGES.items():
            half = (high - low) / 2. * spread
            middle = (low + high) / 2.
            values[name] = float(rng.uniform(middle - half, middle + half))
        return cls(**values)

    @classmethod
    def nominal(cls) -> "VehicleParams":
        """Midpoints of the sampling ranges."""
        return cls(**{name: (low + high) / 2. for name, (low, high) in PARAM_RANGES.items()})

    def resistance(self, velocity: float) -> float:
        """Rolling resistance plus aerodynamic drag in newtons."""
        return (self.rolling_coeff * self.mass * GRAVITY
                + 0.5 * AIR_DENSITY * self.drag_coeff * self.frontal_area * velocity ** 2)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def vehicle_step(velocity: float, position: float, force: float, params: VehicleParams,
                 dt: float) -> Tuple[float, float]:
    """
    Advances one vehicle by dt on a flat road under the balance m·dv/dt = F − c_R·m·g − ½·ρ·C_D·A_f·v².

    The velocity is clamped at zero since resistance cannot reverse the motion; the position moves with
    the updated velocity.

    Args:
        velocity: current speed in m/s, nonnegative.
        position: current position in meters.
        force: traction force F in newtons.
        params: vehicle parameters.
        dt: step length in seconds.

    Returns:
        tuple (velocity, position) after the step.

    Examples:
        >>> params = VehicleParams(0.5, 6e-3, 6., 0.6, 2000.)
        >>> v, _ = vehicle_step(30., 0., 0., params, 0.1)
        >>> round(30. - v, 5)
        0.10511
    """
    acceleration = (force - params.resistance(velocity)) / params.mass
    new_velocity = max(velocity + acceleration * dt, 0.)
    new_position = position + new_velocity * dt
    if not (np.isfinite(new_velocity) and np.isfinite(new_position)):
        raise NumericalError(f"non-finite vehicle state v={new_velocity}, s={new_position}", (velocity, force))
    return new_velocity, new_position

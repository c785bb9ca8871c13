"""Half-car vertical dynamics with first-order longitudinal velocity lag.

The chassis has heave (z) and pitch (theta) degrees of freedom suspended on
front/rear spring-damper pairs; the road enters through the wheel contact
points. Longitudinal motion is a commanded velocity filtered by a first-order
lag with time constant tau. Integration is classical fixed-step RK4.

Suspension deflections are measured from static equilibrium, so gravity shows
up only as the +9.8 m/s^2 offset on the simulated IMU channel.

Note: the printed parameter set (c = 77.6 N s/m against k = 19.6 N/m on a
1.391 kg chassis) is extremely overdamped; it is implemented as given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

GRAVITY_NOMINAL = 9.8  # m/s^2, nominal IMU reading at rest


class DynamicsError(Exception):
    """Base class for dynamics evaluation failures."""


class PitchOutOfRange(DynamicsError):
    """|theta| >= pi/2: outside the model's validity region."""


class NonFinite(DynamicsError):
    """A state, input, or derivative value is NaN or infinite."""


@dataclass(frozen=True)
class VehicleParams:
    """Physical constants of the half-car (defaults: scaled-vehicle values)."""

    m: float = 1.391        # chassis mass, kg
    inertia: float = 0.001897  # pitch moment of inertia, kg m^2
    k1: float = 19.6        # front suspension stiffness, N/m
    k2: float = 19.6        # rear suspension stiffness, N/m
    c1: float = 77.6        # front damping, N s/m
    c2: float = 77.6        # rear damping, N s/m
    L1: float = 0.128       # CG to front axle, m
    L2: float = 0.128       # CG to rear axle, m
    tau: float = 0.3        # commanded-velocity time constant, s
    u_max: float = 2.0      # commanded velocity clamp, m/s

    def __post_init__(self):
        for name in ("m", "inertia", "k1", "k2", "c1", "c2", "L1", "L2", "tau", "u_max"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0.0 and math.isfinite(v)):
                raise ValueError(f"VehicleParams.{name} must be strictly positive, got {v}")


@dataclass(frozen=True)
class VehicleState:
    """Chassis state: longitudinal position/velocity, heave, pitch and rates."""

    x: float = 0.0
    x_dot: float = 0.0
    z: float = 0.0
    z_dot: float = 0.0
    theta: float = 0.0
    theta_dot: float = 0.0

    def as_tuple(self):
        return (self.x, self.x_dot, self.z, self.z_dot, self.theta, self.theta_dot)


@dataclass(frozen=True)
class StateDerivative:
    """Time derivative of each VehicleState field."""

    x_dot: float
    x_ddot: float
    z_dot: float
    z_ddot: float
    theta_dot: float
    theta_ddot: float

    def as_tuple(self):
        return (
            self.x_dot,
            self.x_ddot,
            self.z_dot,
            self.z_ddot,
            self.theta_dot,
            self.theta_ddot,
        )


def axle_kinematics(state: VehicleState, params: VehicleParams):
    """Front/rear axle longitudinal and vertical positions (x1, x2, z1, z2)."""
    c = math.cos(state.theta)
    x1 = state.x + params.L1 * c
    x2 = state.x - params.L2 * c
    z1 = state.z - params.L1 * c
    z2 = state.z + params.L2 * c
    return x1, x2, z1, z2


def _derivatives_raw(x, x_dot, z, z_dot, theta, theta_dot, u_x, p: VehicleParams, terrain):
    """Core equations of motion on unpacked scalars (hot path for RK4)."""
    if not (-math.pi / 2 < theta < math.pi / 2):
        raise PitchOutOfRange(f"|theta| must stay below pi/2, got {theta}")
    s = math.sin(theta)
    c = math.cos(theta)
    x1 = x + p.L1 * c
    x2 = x - p.L2 * c
    # Road input at each wheel; both axles share the chassis forward speed.
    zh1 = terrain.height(x1)
    zh2 = terrain.height(x2)
    zh1_dot = terrain.slope(x1) * x_dot
    zh2_dot = terrain.slope(x2) * x_dot
    # Suspension deflections from static equilibrium and their rates.
    d1 = (z - p.L1 * s) - zh1
    d2 = (z + p.L2 * s) - zh2
    v1 = (z_dot - p.L1 * c * theta_dot) - zh1_dot
    v2 = (z_dot + p.L2 * c * theta_dot) - zh2_dot
    f1 = p.k1 * d1 + p.c1 * v1
    f2 = p.k2 * d2 + p.c2 * v2
    z_ddot = -(f1 + f2) / p.m
    theta_ddot = c * (p.L1 * f1 - p.L2 * f2) / p.inertia
    x_ddot = (u_x - x_dot) / p.tau
    return (x_dot, x_ddot, z_dot, z_ddot, theta_dot, theta_ddot)


def derivatives(state: VehicleState, u_x: float,
                params: VehicleParams, terrain) -> StateDerivative:
    """Evaluate the equations of motion for a commanded velocity u_x."""
    out = _derivatives_raw(*state.as_tuple(), u_x, params, terrain)
    if not all(math.isfinite(v) for v in out):
        raise NonFinite(f"non-finite derivative: {out}")
    return StateDerivative(*out)


def step_rk4(state: VehicleState, u_x: float, params: VehicleParams,
             terrain, dt: float, substeps: int = 8) -> VehicleState:
    """Advance one control period with classical RK4; u_x is zero-order held.

    The period is split into equal substeps because the overdamped pitch mode
    decays at ~1.3e3 1/s with the default parameters, outside RK4's stability
    region at a 120 Hz step. Observations still happen once per control
    period; the substeps are purely internal to the integrator.
    """
    if not (dt > 0.0):
        raise ValueError(f"dt must be positive, got {dt}")
    if not (substeps >= 1):
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    h = dt / substeps
    y = state.as_tuple()
    for _ in range(substeps):
        k1 = _derivatives_raw(*y, u_x, params, terrain)
        y1 = tuple(a + 0.5 * h * b for a, b in zip(y, k1))
        k2 = _derivatives_raw(*y1, u_x, params, terrain)
        y2 = tuple(a + 0.5 * h * b for a, b in zip(y, k2))
        k3 = _derivatives_raw(*y2, u_x, params, terrain)
        y3 = tuple(a + h * b for a, b in zip(y, k3))
        k4 = _derivatives_raw(*y3, u_x, params, terrain)
        y = tuple(
            a + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
        )
    if not all(math.isfinite(v) for v in y):
        raise NonFinite(f"non-finite state after RK4 step: {y}")
    return VehicleState(*y)


def measured_vertical_acceleration(state: VehicleState, u_x: float,
                                   params: VehicleParams, terrain) -> float:
    """Simulated IMU vertical channel: model heave acceleration plus 9.8."""
    return derivatives(state, u_x, params, terrain).z_ddot + GRAVITY_NOMINAL


def mechanical_energy(state: VehicleState, params: VehicleParams) -> float:
    """Kinetic plus suspension strain energy about static equilibrium (flat road)."""
    s = math.sin(state.theta)
    d1 = state.z - params.L1 * s
    d2 = state.z + params.L2 * s
    return (
        0.5 * params.m * state.z_dot**2
        + 0.5 * params.inertia * state.theta_dot**2
        + 0.5 * params.k1 * d1**2
        + 0.5 * params.k2 * d2**2
    )

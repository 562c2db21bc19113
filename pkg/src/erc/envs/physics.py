"""Physical constants for the built-in environments.

Every environment integrates with semi-implicit Euler: velocities are
updated from the current accelerations first, then positions from the new
velocities.  Each control step of length ``dt`` is split into ``substeps``
equal integration steps.  Angles are measured from the upright vertical.
"""

PENDULUM = dict(
    g=10.0,
    mass=1.0,
    length=1.0,
    dt=0.05,
    substeps=40,
    max_torque=2.0,
    max_speed=8.0,
    max_steps=200,
    # reset: theta ~ U(-pi, pi), theta_dot ~ U(-1, 1)
    reset_theta=3.141592653589793,
    reset_speed=1.0,
)

# Cart carrying two stacked passive links, modelled as point masses at the
# link tips on massless rods.
DOUBLE_PENDULUM = dict(
    g=9.81,
    cart_mass=1.0,
    mass1=0.1,
    mass2=0.1,
    length1=0.5,
    length2=0.5,
    joint_damping=0.005,
    cart_friction=0.1,
    force_scale=10.0,
    dt=0.02,
    substeps=4,
    max_steps=500,
    tilt_limit=0.4,
    x_limit=2.4,
    max_cart_speed=10.0,
    max_joint_speed=20.0,
    # reset: x, angles ~ U(-0.05, 0.05); velocities ~ U(-0.05, 0.05)
    reset_noise=0.05,
    action_cost=0.01,
)

# Planar two-link arm without gravity, point masses at the link tips.
REACHER2D = dict(
    mass1=1.0,
    mass2=1.0,
    length1=0.1,
    length2=0.1,
    joint_damping=0.05,
    torque_scale=0.2,
    dt=0.02,
    substeps=4,
    max_steps=100,
    max_joint_speed=10.0,
    # reset: joint angles ~ U(-0.1, 0.1), velocities ~ U(-0.005, 0.005),
    # target uniform in the disc of radius target_radius
    reset_angle=0.1,
    reset_speed=0.005,
    target_radius=0.2,
    action_cost=0.01,
)

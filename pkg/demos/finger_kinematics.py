"""Forward and inverse kinematics of one finger, with the tendon torque map.

Run: python3 demos/finger_kinematics.py
"""

import numpy as np

from tendonhand import load_config
from tendonhand.kinematics import closure_residuals, forward_kinematics, inverse_kinematics, jacobian
from tendonhand.transmission import joint_to_motor_torque, motor_to_joint_torque

cfg = load_config()
geom = cfg.finger

print("joint angles (deg)      fingertip (mm)              IK recovers (deg)")
for deg in ([0, 0, 0], [20, 45, 30], [-30, 90, 90], [10, 70, 5]):
    theta = np.radians(deg)
    tip = forward_kinematics(geom, theta).position
    back = np.degrees(inverse_kinematics(geom, tip).theta)
    print(f"{str(deg):22s}  {np.array2string(tip, precision=3):26s}  {np.array2string(back, precision=6)}")

theta = np.radians([15, 40, 60])
tip = forward_kinematics(geom, theta).position
print("\nclosure residuals at the FK output:", closure_residuals(geom, theta, tip))
print("Jacobian (mm/rad):\n", np.round(jacobian(geom, theta), 3))

# the two palm motors act together on MCP1 and against each other on MCP2
M = motor_to_joint_torque(cfg.routing, 10.0, 4.0, 0.0)
print("\nmotor torques (10, 4, 0) N*mm -> joint torques", M)
print("and back ->", joint_to_motor_torque(cfg.routing, M))

"""Reference implementations written independently of the package code.

Each one uses a different method from the code it checks: a bit-serial CRC
instead of the table-driven one, a chain of elementary 4x4 transforms instead
of matrix exponentials, and numerical differentiation instead of the
analytic Jacobian.
"""

import numpy as np


def crc16_bitwise(data, poly=0x1021, init=0xFFFF):
    """CRC-16/CCITT-FALSE, one bit at a time, MSB first."""
    crc = init
    for byte in data:
        for i in range(7, -1, -1):
            bit = (byte >> i) & 1
            top = (crc >> 15) & 1
            crc = (crc << 1) & 0xFFFF
            if top ^ bit:
                crc ^= poly
    return crc


def _rot_z(a):
    c, s = np.cos(a), np.sin(a)
    T = np.eye(4)
    T[:2, :2] = [[c, -s], [s, c]]
    return T


def _rot_y(a):
    c, s = np.cos(a), np.sin(a)
    T = np.eye(4)
    T[0, 0], T[0, 2], T[2, 0], T[2, 2] = c, s, -s, c
    return T


def _trans_x(d):
    T = np.eye(4)
    T[0, 3] = d
    return T


def fingertip_by_transform_chain(theta, L1=16.0, L2=32.0, L3=44.0):
    """Fingertip position from a chain of joint rotations and link offsets.

    MCP1 turns about z at the origin; MCP2 and PIP turn about -y (flexion
    towards +z) at the ends of the first and second links.
    """
    t1, t2, t3 = theta
    T = _rot_z(t1) @ _trans_x(L1) @ _rot_y(-t2) @ _trans_x(L2) @ _rot_y(-t3) @ _trans_x(L3)
    return T[:3, 3]


def central_difference_jacobian(f, theta, h=1e-6):
    theta = np.asarray(theta, dtype=float)
    cols = []
    for i in range(len(theta)):
        e = np.zeros_like(theta)
        e[i] = h
        cols.append((f(theta + e) - f(theta - e)) / (2 * h))
    return np.column_stack(cols)


def revolved_workspace_volume_cm3(L1=16.0, L2=32.0, L3=44.0, sweep_deg=60.0, h=0.05):
    """Fingertip workspace volume by Pappus' theorem.

    The MCP2/PIP sub-chain (both joints in [0, 90 deg]) sweeps a planar
    region in the (rho, z) half-plane and MCP1 turns it through
    ``sweep_deg`` about the z axis, so V = sweep * integral of |rho| dA.
    Membership of each midpoint of an ``h`` grid is decided with the
    textbook two-link elbow solution.
    """
    reach = L1 + L2 + L3
    rho = np.arange(-reach, reach, h) + h / 2
    z = np.arange(0.0, L2 + L3, h) + h / 2
    R, Z = np.meshgrid(rho, z, indexing="ij")
    x = R - L1
    c3 = (x * x + Z * Z - L2 * L2 - L3 * L3) / (2 * L2 * L3)
    ok = (c3 >= 0) & (c3 <= 1)
    t3 = np.arccos(np.clip(c3, -1, 1))
    t2 = np.arctan2(Z, x) - np.arctan2(L3 * np.sin(t3), L2 + L3 * np.cos(t3))
    t2 = (t2 + np.pi) % (2 * np.pi) - np.pi
    ok &= (t2 >= 0) & (t2 <= np.pi / 2)
    moment = np.sum(np.abs(R[ok])) * h * h
    return np.radians(sweep_deg) * moment / 1000.0

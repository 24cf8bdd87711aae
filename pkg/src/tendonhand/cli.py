"""Command-line front end.

Angles are degrees at this boundary and radians everywhere inside.
Exit codes: 0 success, 1 usage, 2 domain error, 3 internal fault.
"""

import argparse
import json
import logging
import sys

import numpy as np

from . import bus, grasps, kinematics, statics, workspace
from .config import load_config
from .control import HandSimulator
from .errors import HandError, InvalidArgumentError

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _dump(obj, out):
    out.write(json.dumps(obj, separators=(", ", ": ")) + "\n")


def _r(x, nd=9):
    return np.round(np.asarray(x, dtype=float), nd).tolist()


# --- commands ---------------------------------------------------------------

def cmd_fk(args, cfg, out):
    theta = np.radians(args.angles)
    if len(theta) != cfg.finger.dof:
        raise InvalidArgumentError(f"expected {cfg.finger.dof} joint angles, got {len(theta)}")
    if not kinematics.within_limits(cfg.finger, theta):
        logging.getLogger(__name__).warning("joint angles outside the joint limits")
    fp = kinematics.forward_kinematics(cfg.finger, theta)
    _dump({"theta_deg": list(args.angles), "position_mm": _r(fp.position),
           "orientation": _r(fp.orientation)}, out)


def cmd_ik(args, cfg, out):
    theta = kinematics.inverse_kinematics(cfg.finger, np.asarray(args.target, dtype=float)).theta
    _dump({"target_mm": list(args.target), "theta_deg": _r(np.degrees(theta))}, out)


def cmd_workspace(args, cfg, out):
    cloud = workspace.hand_workspace(cfg.hand, resolution=args.resolution, voxel=args.voxel)
    if args.csv:
        workspace.write_csv(cloud, args.csv)
    if args.ply:
        workspace.write_ply(cloud, args.ply)
    _dump({"resolution": args.resolution, "voxel_mm": args.voxel,
           "volume_cm3": {k: round(v, 6) for k, v in cloud.volume_cm3.items()}}, out)


def load_trajectory(path):
    """Step references from a JSON list of ``{"t": s, "joints_deg": [15]}``."""
    with open(path) as fh:
        pts = json.load(fh)
    if not isinstance(pts, list) or not pts:
        raise InvalidArgumentError("trajectory must be a non-empty JSON list")
    times, refs = [], []
    for p in pts:
        j = np.asarray(p["joints_deg"], dtype=float).reshape(-1)
        if j.size != 15:
            raise InvalidArgumentError("each trajectory point needs 15 joint angles")
        times.append(float(p["t"]))
        refs.append(np.radians(j))
    order = np.argsort(times, kind="stable")
    return np.asarray(times)[order], np.asarray(refs)[order]


def _reference_at(times, refs, t):
    k = np.searchsorted(times, t, side="right") - 1
    return refs[max(k, 0)] if k >= 0 else np.zeros(15)


def _make_sim(args, cfg, frame_log=None):
    if args.bus == "on":
        channel = bus.LossyChannel(args.drop, args.corrupt, seed=args.seed, log=frame_log)
        return HandSimulator(cfg, link=bus.BusLink(channel), seed=args.seed)
    if args.drop or args.corrupt:
        raise InvalidArgumentError("--drop/--corrupt need --bus on")
    return HandSimulator(cfg, seed=args.seed)


def cmd_simulate(args, cfg, out):
    if args.trajectory:
        times, refs = load_trajectory(args.trajectory)
    elif args.pose:
        times, refs = np.zeros(1), grasps.get_pose(args.pose).joints[None]
    else:
        times, refs = np.zeros(1), np.zeros((1, 15))
    log = [] if args.frame_log else None
    sim = _make_sim(args, cfg, log)
    n = int(round(args.duration / sim.timing.outer_dt))
    for k in range(n):
        sim.tick(_reference_at(times, refs, k * sim.timing.outer_dt))
        out.write(sim.telemetry() + "\n")
    if args.frame_log:
        with open(args.frame_log, "w") as fh:
            fh.writelines(line + "\n" for line in log)


def cmd_grasp(args, cfg, out):
    poses = grasps.load_poses()
    if args.action == "list":
        for p in poses.values():
            _dump({"name": p.name, "category": p.category}, out)
        return EXIT_OK
    names = list(poses) if args.name in (None, "all") else [args.name]
    ok = True
    for name in names:
        pose = grasps.get_pose(name, poses)
        if args.action == "validate":
            rep = grasps.validate_pose(pose, cfg.hand)
        else:
            rep = grasps.execute_pose(pose, _make_sim(args, cfg), timeout=args.timeout, tol_deg=args.tol)
        ok &= rep.feasible if args.action == "validate" else rep.reached
        _dump(rep.as_dict(), out)
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_calibrate(args, cfg, out):
    geom = cfg.finger
    c = statics.max_fingertip_force(geom, cfg.routing, cfg.palm_motor, cfg.arm_motor)
    tau = statics.joint_torque(geom, statics.TEST_POSTURE, (0.0, 0.0, c.force_n))
    rec = {"posture_deg": _r(np.degrees(statics.TEST_POSTURE)), **c.as_dict(),
           "duality_residual": statics.duality_residual(geom, statics.TEST_POSTURE, tau)}
    _dump(rec, out)


def cmd_host(args, cfg, out):
    """Serve the framed host protocol: frames on stdin, replies on stdout."""
    port = bus.HostPort(_make_sim(args, cfg))
    src = sys.stdin.buffer
    dst = getattr(out, "buffer", out)
    while True:
        chunk = src.read1(4096) if hasattr(src, "read1") else src.read(4096)
        if not chunk:
            break
        reply = port.feed(chunk)
        if reply:
            dst.write(reply)
            dst.flush()


# --- parser -----------------------------------------------------------------

def _add_bus_flags(p):
    p.add_argument("--bus", choices=("on", "off"), default="off",
                   help="route traffic through the framed bus emulation (default off)")
    p.add_argument("--drop", type=float, default=0.0, help="frame drop probability (bus on)")
    p.add_argument("--corrupt", type=float, default=0.0, help="single-bit corruption probability (bus on)")


def build_parser():
    p = _Parser(prog="tendonhand", description="Tendon-driven hand kinematics and control simulator.")
    p.add_argument("--config", help="hand parameter file (JSON); packaged defaults if omitted")
    p.add_argument("--seed", type=int, default=0, help="seed for every random source (default 0)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("fk", help="fingertip position for joint angles (deg)")
    s.add_argument("angles", type=float, nargs="+", metavar="DEG")
    s.set_defaults(func=cmd_fk)

    s = sub.add_parser("ik", help="joint angles (deg) for a fingertip target (mm)")
    s.add_argument("target", type=float, nargs=3, metavar=("X", "Y", "Z"))
    s.set_defaults(func=cmd_ik)

    s = sub.add_parser("workspace", help="per-finger workspace volume table")
    s.add_argument("--resolution", type=int, default=50, help="samples per joint (default 50)")
    s.add_argument("--voxel", type=float, default=1.0, help="voxel edge in mm (default 1)")
    s.add_argument("--csv", help="write the palm-frame cloud as x,y,z,finger_id CSV")
    s.add_argument("--ply", help="write the palm-frame cloud as ASCII PLY")
    s.set_defaults(func=cmd_workspace)

    s = sub.add_parser("simulate", help="closed-loop run, JSONL telemetry on stdout")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--trajectory", help='JSON list of {"t": s, "joints_deg": [15 values]} steps')
    g.add_argument("--pose", help="hold a named grasp pose as the reference")
    s.add_argument("--duration", type=float, default=1.0, help="simulated seconds (default 1)")
    s.add_argument("--frame-log", help="write every bus frame as a hex dump line")
    s.add_argument("-o", "--output", help="telemetry file (default stdout)")
    _add_bus_flags(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("grasp", help="list, validate or execute grasp presets")
    s.add_argument("action", choices=("list", "validate", "execute"))
    s.add_argument("name", nargs="?", help="pose name, or 'all' (default all)")
    s.add_argument("--timeout", type=float, default=2.0, help="simulated seconds (default 2)")
    s.add_argument("--tol", type=float, default=1.0, help="settling band in degrees (default 1)")
    _add_bus_flags(s)
    s.set_defaults(func=cmd_grasp)

    s = sub.add_parser("calibrate", help="static fingertip-force calibration at the test posture")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("host", help="serve the framed host protocol on stdin/stdout")
    _add_bus_flags(s)
    s.set_defaults(func=cmd_host)
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc) + "\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "output", None):
            with open(args.output, "w") as fh:
                code = args.func(args, cfg, fh)
        else:
            code = args.func(args, cfg, out)
        return EXIT_OK if code is None else code
    except HandError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_DOMAIN
    except Exception as exc:  # noqa: BLE001
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()

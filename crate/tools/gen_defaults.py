#!/usr/bin/env python3
"""Regenerates the shipped default data under data/.

The robot hand is the 8-joint, three-finger gripper. The human hand is a
16-joint glove-style model whose thumb, index and ring finger bases are
derived so that, at both origin poses, scaling the human fingertips by the
fingertip-map scale and rotating them into the robot frame lands exactly on
the robot fingertips. Joint-map offsets are derived the same way so the two
origins correspond under the joint mapping too.

Usage: python3 tools/gen_defaults.py [out_dir]
"""

import math
import sys
from pathlib import Path

import numpy as np
from scipy.spatial.transform import Rotation

OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"

SCALE = 1.5
# master hand frame -> slave hand frame
HAND_ROT = np.diag([1.0, -1.0, -1.0])


def rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def planar_tip(links, angles):
    x = z = phi = 0.0
    for l, a in zip(links, angles):
        phi += a
        x += l * math.cos(phi)
        z += l * math.sin(phi)
    return np.array([x, 0.0, z])


def fk(finger, pose, joint_index):
    rot = finger["rot"]
    ad = finger.get("adduction")
    if ad is not None:
        rot = rot @ rz(pose[joint_index[ad]])
    angles = [pose[joint_index[j]] for j in finger["joints"]]
    return np.asarray(finger["base"]) + rot @ planar_tip(finger["links"], angles)


def quat_wxyz(rot):
    x, y, z, w = Rotation.from_matrix(rot).as_quat()
    if w < 0:
        x, y, z, w = -x, -y, -z, -w
    return [w, x, y, z]


def fmt(v):
    return repr(float(v))


def fmt_list(vs):
    return "[" + ", ".join(fmt(v) for v in vs) + "]"


# ---------------------------------------------------------------- robot hand

ROBOT_JOINTS = [
    # name, min, max, axis, origin
    ("f0_prox", -0.3, 1.5, "sigma", 0.4),
    ("f0_dis", 0.0, 1.5, "epsilon", 0.4),
    ("f1_ad", -0.5, 0.5, "alpha", 0.0),
    ("f1_prox", -0.3, 1.5, "sigma", 0.4),
    ("f1_dis", 0.0, 1.5, "epsilon", 0.4),
    ("f2_ad", -0.5, 0.5, "alpha", 0.0),
    ("f2_prox", -0.3, 1.5, "sigma", 0.4),
    ("f2_dis", 0.0, 1.5, "epsilon", 0.4),
]
ROBOT_LINKS = [0.0865, 0.068]
ROBOT_FINGERS = [
    dict(name="f0", base=[0.06, 0.0, -0.04], rot=np.eye(3), joints=["f0_prox", "f0_dis"],
         links=ROBOT_LINKS, adduction=None),
    dict(name="f1", base=[0.12, -0.033, 0.04], rot=rx(math.pi), joints=["f1_prox", "f1_dis"],
         links=ROBOT_LINKS, adduction="f1_ad"),
    dict(name="f2", base=[0.12, 0.033, 0.04], rot=rx(math.pi), joints=["f2_prox", "f2_dis"],
         links=ROBOT_LINKS, adduction="f2_ad"),
]

# ---------------------------------------------------------------- human hand

HUMAN_JOINTS = [
    ("thumb_ad", -0.3, 1.0, "sigma", 0.2),
    ("thumb_mcp", -0.2, 1.2, "sigma", 0.4),
    ("thumb_ip", -0.2, 1.4, "epsilon", 0.4),
    ("index_mcp", -0.3, 1.5, "sigma", 0.3),
    ("index_pip", 0.0, 1.8, "epsilon", 0.4),
    ("index_dip", 0.0, 1.3, "epsilon", 0.3),
    ("middle_mcp", -0.3, 1.5, "sigma", 0.3),
    ("middle_pip", 0.0, 1.8, "epsilon", 0.4),
    ("middle_dip", 0.0, 1.3, "epsilon", 0.3),
    ("ring_mcp", -0.3, 1.5, "sigma", 0.3),
    ("ring_pip", 0.0, 1.8, "epsilon", 0.4),
    ("ring_dip", 0.0, 1.3, "epsilon", 0.3),
    ("pinky_mcp", -0.3, 1.5, "sigma", 0.3),
    ("pinky_pip", 0.0, 1.8, "none", 0.4),
    ("index_middle_ad", -0.2, 0.4, "alpha", 0.1),
    ("ring_middle_ad", -0.2, 0.4, "alpha", 0.1),
]

robot_index = {j[0]: i for i, j in enumerate(ROBOT_JOINTS)}
human_index = {j[0]: i for i, j in enumerate(HUMAN_JOINTS)}
robot_origin = [j[4] for j in ROBOT_JOINTS]
human_origin = [j[4] for j in HUMAN_JOINTS]

HUMAN_FINGERS = [
    dict(name="thumb", rot=HAND_ROT @ rz(-human_origin[human_index["thumb_ad"]]),
         joints=["thumb_mcp", "thumb_ip"], links=[l / SCALE for l in ROBOT_LINKS],
         adduction="thumb_ad", match="f0"),
    dict(name="index", rot=rz(-human_origin[human_index["index_middle_ad"]]),
         joints=["index_mcp", "index_pip", "index_dip"], links=[0.046, 0.026, 0.018],
         adduction="index_middle_ad", match="f1"),
    dict(name="middle", base=[0.095, 0.0, -0.017], rot=np.eye(3),
         joints=["middle_mcp", "middle_pip", "middle_dip"], links=[0.05, 0.03, 0.02],
         adduction=None),
    dict(name="ring", rot=rz(-human_origin[human_index["ring_middle_ad"]]),
         joints=["ring_mcp", "ring_pip", "ring_dip"], links=[0.044, 0.027, 0.019],
         adduction="ring_middle_ad", match="f2"),
    dict(name="pinky", base=[0.08, -0.042, -0.014], rot=np.eye(3),
         joints=["pinky_mcp", "pinky_pip"], links=[0.035, 0.022], adduction=None),
]

robot_by_name = {f["name"]: f for f in ROBOT_FINGERS}
for f in HUMAN_FINGERS:
    if "match" not in f:
        continue
    target = HAND_ROT.T @ fk(robot_by_name[f["match"]], robot_origin, robot_index) / SCALE
    rot = f["rot"] @ rz(human_origin[human_index[f["adduction"]]])
    angles = [human_origin[human_index[j]] for j in f["joints"]]
    f["base"] = list(target - rot @ planar_tip(f["links"], angles))


def write_model(path, name, joints, fingers, origin):
    lines = [f'name = "{name}"', f"origin_pose = {fmt_list(origin)}", ""]
    for jn, lo, hi, axis, _ in joints:
        lines += ["[[joints]]", f'name = "{jn}"', f"min = {fmt(lo)}", f"max = {fmt(hi)}",
                  f'axis = "{axis}"', ""]
    for f in fingers:
        lines += ["[[fingers]]", f'name = "{f["name"]}"',
                  f"base_position = {fmt_list(f['base'])}",
                  f"base_orientation = {fmt_list(quat_wxyz(f['rot']))}",
                  "joints = [" + ", ".join(f'"{j}"' for j in f["joints"]) + "]",
                  f"link_lengths = {fmt_list(f['links'])}"]
        if f.get("adduction"):
            lines.append(f'adduction_joint = "{f["adduction"]}"')
        lines.append("")
    path.write_text("\n".join(lines))


def with_values(origin, index, values):
    pose = list(origin)
    for k, v in values.items():
        pose[index[k]] = v
    return pose


def check_limits(pose, joints):
    for v, (n, lo, hi, _, _) in zip(pose, joints):
        assert lo <= v <= hi, (n, v, lo, hi)


def write_calibration(path, name, poses, joints):
    lines = [f'model_name = "{name}"', ""]
    for comment, labels, pose in poses:
        check_limits(pose, joints)
        lines += [f"# {comment}", "[[poses]]",
                  "labels = [" + ", ".join(f'"{l}"' for l in labels) + "]",
                  f"angles = {fmt_list(pose)}", ""]
    path.write_text("\n".join(lines))


# ------------------------------------------------------------- calibrations

ROBOT_CAL = [
    ("proximal joints closed, fingers pulled together", ["sigma_max", "alpha_min"],
     with_values(robot_origin, robot_index, {
         "f0_prox": 1.2, "f1_prox": 1.2, "f2_prox": 1.2, "f1_ad": -0.4, "f2_ad": -0.4})),
    ("fingers spread", ["alpha_max"],
     with_values(robot_origin, robot_index, {"f1_ad": 0.4, "f2_ad": 0.4})),
    ("hand flat open", ["epsilon_min", "sigma_min"],
     with_values(robot_origin, robot_index, {
         "f0_prox": -0.2, "f1_prox": -0.2, "f2_prox": -0.2,
         "f0_dis": 0.0, "f1_dis": 0.0, "f2_dis": 0.0})),
    ("distal joints curled", ["epsilon_max"],
     with_values(robot_origin, robot_index, {"f0_dis": 1.3, "f1_dis": 1.3, "f2_dis": 1.3})),
]

SIGMA_H = ["thumb_ad", "thumb_mcp", "index_mcp", "middle_mcp", "ring_mcp", "pinky_mcp"]
EPS_H = ["thumb_ip", "index_pip", "index_dip", "middle_pip", "middle_dip", "ring_pip", "ring_dip"]
ALPHA_H = ["index_middle_ad", "ring_middle_ad"]

h_p1 = with_values(human_origin, human_index, {**{j: 1.0 for j in SIGMA_H}, **{j: -0.15 for j in ALPHA_H}})
h_p2 = with_values(human_origin, human_index, {j: 0.35 for j in ALPHA_H})
h_p3 = with_values(human_origin, human_index, {
    **{j: -0.2 for j in SIGMA_H}, "thumb_mcp": -0.1,
    **{j: 0.0 for j in EPS_H}, "thumb_ip": -0.1})
h_p4 = with_values(human_origin, human_index, {
    "thumb_ip": 1.2, "index_pip": 1.6, "middle_pip": 1.6, "ring_pip": 1.6,
    "index_dip": 1.1, "middle_dip": 1.1, "ring_dip": 1.1})
HUMAN_CAL = [
    ("large object grasp, fingers together", ["sigma_max", "alpha_min"], h_p1),
    ("fingers spread wide", ["alpha_max"], h_p2),
    ("hand flat, fingers straight", ["epsilon_min", "sigma_min"], h_p3),
    ("fingers curled at the middle and distal joints", ["epsilon_max"], h_p4),
]

PINCH = with_values(human_origin, human_index, {
    "thumb_mcp": 0.9, "thumb_ip": 0.6, "index_mcp": 0.7, "index_pip": 0.6, "index_dip": 0.4})
POWER = with_values(human_origin, human_index, {
    "thumb_ad": 0.8, "thumb_mcp": 0.9, "thumb_ip": 0.9,
    "index_mcp": 1.2, "index_pip": 1.4, "index_dip": 0.9,
    "middle_mcp": 1.2, "middle_pip": 1.4, "middle_dip": 0.9,
    "ring_mcp": 1.2, "ring_pip": 1.4, "ring_dip": 0.9,
    "pinky_mcp": 1.2, "pinky_pip": 1.4})


def reach_check():
    """Pinch targets must sit inside the robot finger workspaces."""
    human_by_name = {f["name"]: f for f in HUMAN_FINGERS}
    for hname, rname in [("thumb", "f0"), ("index", "f1")]:
        tip = HAND_ROT @ (SCALE * fk(human_by_name[hname], PINCH, human_index))
        rf = robot_by_name[rname]
        local = rf["rot"].T @ (tip - np.asarray(rf["base"]))
        l1, l2 = rf["links"]
        d = np.linalg.norm(local)
        assert abs(l1 - l2) < d < l1 + l2, (hname, d)
        c2 = (d * d - l1 * l1 - l2 * l2) / (2 * l1 * l2)
        t2 = math.acos(c2)
        r = math.hypot(local[0], local[1])
        if rf["adduction"]:
            ad = math.atan2(local[1], local[0])
        else:
            assert abs(local[1]) < 1e-12
            ad = 0.0
        t1 = math.atan2(local[2], r) - math.atan2(l2 * math.sin(t2), l1 + l2 * math.cos(t2))
        print(f"pinch {hname}->{rname}: ad={ad:.3f} prox={t1:.3f} dis={t2:.3f}")
        assert -0.3 < t1 < 1.5 and 0.0 < t2 < 1.5 and -0.5 < ad < 0.5


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_model(OUT / "robot_default.model.toml", "robot_default", ROBOT_JOINTS, ROBOT_FINGERS, robot_origin)
    write_model(OUT / "human_default.model.toml", "human_default", HUMAN_JOINTS, HUMAN_FINGERS, human_origin)
    write_calibration(OUT / "robot_default.cal", "robot_default", ROBOT_CAL, ROBOT_JOINTS)
    write_calibration(OUT / "human_default.cal", "human_default", HUMAN_CAL, HUMAN_JOINTS)

    check_limits(PINCH, HUMAN_JOINTS)
    check_limits(POWER, HUMAN_JOINTS)
    reach_check()
    (OUT / "human_default.poses.toml").write_text("\n".join([
        'model_name = "human_default"', "", "[poses]",
        f"origin = {fmt_list(human_origin)}",
        f"pinch = {fmt_list(PINCH)}",
        f"power = {fmt_list(POWER)}", ""]))

    # Glove-style sensor pairing, with the thumb adductor driving the robot thumb's proximal joint.
    table = [
        ("a", "thumb_ad", "f0_prox", 1.0),
        ("b", "thumb_ip", "f0_dis", 1.0),
        ("e", "index_middle_ad", "f1_ad", 1.0),
        ("c", "index_mcp", "f1_prox", 1.0),
        ("d", "index_pip", "f1_dis", 1.0),
        ("e", "index_middle_ad", "f2_ad", -1.0),
        ("f", "middle_mcp", "f2_prox", 1.0),
        ("g", "middle_pip", "f2_dis", 1.0),
    ]
    lines = ['master_model = "human_default"', 'slave_model = "robot_default"', ""]
    for label, m, s, gain in table:
        offset = robot_origin[robot_index[s]] - gain * human_origin[human_index[m]]
        lines += [f"# glove sensor {label}", "[[pairs]]", f'master = "{m}"', f'slave = "{s}"',
                  f"gain = {fmt(gain)}", f"offset = {fmt(offset)}", ""]
    (OUT / "human_robot.joint.toml").write_text("\n".join(lines))

    (OUT / "human_robot.fingertip.toml").write_text("\n".join([
        'master_model = "human_default"', 'slave_model = "robot_default"',
        f"scale = {fmt(SCALE)}",
        f"rotation = {fmt_list(HAND_ROT.flatten())}",
        'pairs = [["thumb", "f0"], ["index", "f1"], ["ring", "f2"]]', "",
        "[ik]", "damping = 0.01", "max_iterations = 200", "position_tolerance = 1e-6",
        "step_limit = 0.2", ""]))

    # open / close / grasp sweep through the calibration extrema, 500 samples at 100 Hz
    keys = [human_origin, h_p3, h_p1, PINCH, h_p4, h_p2, human_origin]
    n, rate = 500, 100.0
    segs = len(keys) - 1
    rows = ["# model: human_default", "time," + ",".join(j[0] for j in HUMAN_JOINTS)]
    for k in range(n):
        u = k / (n - 1) * segs
        i = min(int(u), segs - 1)
        s = u - i
        s = s * s * (3.0 - 2.0 * s)
        pose = [(1.0 - s) * a + s * b for a, b in zip(keys[i], keys[i + 1])]
        check_limits(pose, HUMAN_JOINTS)
        rows.append(",".join([repr(k / rate)] + [repr(v) for v in pose]))
    (OUT / "sweep.csv").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()

"""URDF-subset parser.

Supported elements: link/inertial (origin, mass, inertia) and joint
(revolute, continuous, prismatic, fixed, floating) with origin, axis and
limit tags.  Geometry, transmission and gazebo tags are ignored with a
warning; meshes are out of scope.  If the root link is named "world" the
model is fixed-base, otherwise a floating joint is inserted at the root
(override with the floating_base argument).
"""
from __future__ import annotations

import logging
import math
import xml.etree.ElementTree as ET

import numpy as np

from ..errors import ModelParseError
from . import spatial
from .model import JointType, Link, RobotModel

log = logging.getLogger(__name__)

_IGNORED_TAGS = {"transmission", "gazebo", "material"}
_JOINT_TYPES = {
    "revolute": JointType.REVOLUTE,
    "continuous": JointType.REVOLUTE,  # revolute without position limits
    "prismatic": JointType.PRISMATIC,
    "fixed": JointType.FIXED,
    "floating": JointType.FLOATING,
}


def _vec(text, path, n=3):
    try:
        v = np.array([float(x) for x in text.split()])
    except ValueError:
        raise ModelParseError(f"bad numeric list '{text}'", path)
    if len(v) != n:
        raise ModelParseError(f"expected {n} numbers, got {len(v)}", path)
    return v


def _origin(elem, path):
    R = np.eye(3)
    p = np.zeros(3)
    origin = elem.find("origin")
    if origin is not None:
        if "xyz" in origin.attrib:
            p = _vec(origin.attrib["xyz"], path + "/origin")
        if "rpy" in origin.attrib:
            r = _vec(origin.attrib["rpy"], path + "/origin")
            R = spatial.rpy_to_rot(*r)
    return R, p


def _inertial(link_elem, path):
    inertial = link_elem.find("inertial")
    if inertial is None:
        return None
    mass_elem = inertial.find("mass")
    if mass_elem is None:
        raise ModelParseError("inertial without mass", path)
    mass = float(mass_elem.attrib["value"])
    R, p = _origin(inertial, path + "/inertial")
    ine = inertial.find("inertia")
    if ine is None:
        raise ModelParseError("inertial without inertia tensor", path)
    a = ine.attrib
    I = np.array([
        [float(a.get("ixx", 0)), float(a.get("ixy", 0)), float(a.get("ixz", 0))],
        [float(a.get("ixy", 0)), float(a.get("iyy", 0)), float(a.get("iyz", 0))],
        [float(a.get("ixz", 0)), float(a.get("iyz", 0)), float(a.get("izz", 0))],
    ])
    # Inertia is given about the CoM in inertial-frame axes; rotate to link axes.
    I = R @ I @ R.T
    return mass, p, I


def parse_model(urdf_text: str, floating_base=None) -> RobotModel:
    """Parse a URDF-subset string into a RobotModel."""
    try:
        root = ET.fromstring(urdf_text)
    except ET.ParseError as e:
        raise ModelParseError(f"malformed XML: {e}", "<document>")
    if root.tag != "robot":
        raise ModelParseError(f"expected <robot> root, got <{root.tag}>", "/")

    for child in root:
        if child.tag in _IGNORED_TAGS:
            log.warning("ignoring unsupported tag <%s>", child.tag)

    link_elems = {}
    for le in root.findall("link"):
        name = le.attrib.get("name")
        if not name:
            raise ModelParseError("link without name", "robot/link")
        if name in link_elems:
            raise ModelParseError(f"duplicate link '{name}'", f"robot/link[{name}]")
        link_elems[name] = le

    joints = []
    children_of = {}
    child_names = set()
    for je in root.findall("joint"):
        jname = je.attrib.get("name", "?")
        path = f"robot/joint[{jname}]"
        jtype_str = je.attrib.get("type", "")
        if jtype_str not in _JOINT_TYPES:
            raise ModelParseError(f"unsupported joint type '{jtype_str}'", path)
        parent_e = je.find("parent")
        child_e = je.find("child")
        if parent_e is None or child_e is None:
            raise ModelParseError("joint missing parent/child", path)
        parent, child = parent_e.attrib["link"], child_e.attrib["link"]
        for nm in (parent, child):
            if nm not in link_elems:
                raise ModelParseError(f"joint references unknown link '{nm}'", path)
        if child in child_names:
            raise ModelParseError(f"link '{child}' has two parent joints", path)
        child_names.add(child)
        R, p = _origin(je, path)
        axis = np.array([0.0, 0.0, 1.0])
        axis_e = je.find("axis")
        if axis_e is not None:
            axis = _vec(axis_e.attrib.get("xyz", "0 0 1"), path + "/axis")
        jtype = _JOINT_TYPES[jtype_str]
        if jtype in (JointType.REVOLUTE, JointType.PRISMATIC):
            norm = np.linalg.norm(axis)
            if abs(norm - 1.0) > 1e-6:
                raise ModelParseError(f"joint axis not unit length (|a|={norm:.6f})", path)
        effort = math.inf
        lower, upper = -math.inf, math.inf
        limit_e = je.find("limit")
        if limit_e is not None:
            if "effort" in limit_e.attrib:
                effort = float(limit_e.attrib["effort"])
            if "lower" in limit_e.attrib:
                lower = float(limit_e.attrib["lower"])
            if "upper" in limit_e.attrib:
                upper = float(limit_e.attrib["upper"])
        joints.append(dict(name=jname, type=jtype, parent=parent, child=child,
                           R=R, p=p, axis=axis, effort=effort,
                           lower=lower, upper=upper, path=path))
        children_of.setdefault(parent, []).append(len(joints) - 1)

    roots = [nm for nm in link_elems if nm not in child_names]
    if len(roots) != 1:
        raise ModelParseError(
            f"tree must have exactly one root, found {sorted(roots)}", "robot")
    root_name = roots[0]

    # Cycle check: walking up from any link must terminate at the root.
    parent_of = {j["child"]: j["parent"] for j in joints}
    for nm in link_elems:
        seen = set()
        cur = nm
        while cur in parent_of:
            if cur in seen:
                raise ModelParseError(f"cycle through link '{cur}'", f"robot/link[{cur}]")
            seen.add(cur)
            cur = parent_of[cur]

    # An explicit floating joint re-roots the tree at its child; the anchor
    # link above it (typically "world") is dropped so the floating base is
    # always the first link with the first 6 velocity coordinates.
    floating_joints = [j for j in joints if j["type"] == JointType.FLOATING]
    if len(floating_joints) > 1:
        raise ModelParseError("at most one floating joint is supported",
                              floating_joints[1]["path"])
    if floating_joints:
        fj = floating_joints[0]
        if fj["parent"] != root_name:
            raise ModelParseError("floating joint must attach to the root link",
                                  fj["path"])
        if len(children_of.get(root_name, [])) != 1:
            raise ModelParseError("root link with a floating joint cannot have "
                                  "other children", fj["path"])
        del link_elems[root_name]
        root_name = fj["child"]
        joints = [j for j in joints if j is not fj]
        children_of = {}
        for k, j in enumerate(joints):
            children_of.setdefault(j["parent"], []).append(k)
        floating_base = True

    if floating_base is None:
        floating_base = root_name != "world"

    def inertial_or_error(name, required):
        data = _inertial(link_elems[name], f"robot/link[{name}]")
        if data is None:
            if required:
                raise ModelParseError(
                    f"dynamic link '{name}' has no inertial data", f"robot/link[{name}]")
            return 0.0, np.zeros(3), np.zeros((3, 3))
        mass, com, I = data
        if required:
            if mass <= 0:
                raise ModelParseError(f"dynamic link '{name}' must have mass > 0",
                                      f"robot/link[{name}]")
            sym_err = np.max(np.abs(I - I.T))
            if sym_err > 1e-9 or np.any(np.linalg.eigvalsh(I) <= 0):
                raise ModelParseError(
                    f"inertia of '{name}' must be symmetric positive definite",
                    f"robot/link[{name}]")
        return mass, com, I

    links = []
    q_idx = 0
    v_idx = 0

    def add_link(name, parent_idx, jtype, jname, axis, R, p, effort,
                 lower=-math.inf, upper=math.inf):
        nonlocal q_idx, v_idx
        # Inertial data is mandatory on links hanging from a moving joint.
        required = jtype in (JointType.REVOLUTE, JointType.PRISMATIC, JointType.FLOATING)
        mass, com, I = inertial_or_error(name, required)
        lk = Link(name=name, parent=parent_idx, joint_type=jtype, joint_name=jname,
                  axis=axis, offset_R=R, offset_p=p, mass=mass, com=com, inertia=I,
                  effort_limit=effort, lower_limit=lower, upper_limit=upper,
                  q_index=q_idx, v_index=v_idx)
        if jtype == JointType.FLOATING:
            q_idx += 7
            v_idx += 6
        elif jtype in (JointType.REVOLUTE, JointType.PRISMATIC):
            q_idx += 1
            v_idx += 1
        links.append(lk)
        return len(links) - 1

    # Root link: floating joint to the world, or anchored when fixed-base.
    root_jtype = JointType.FLOATING if floating_base else JointType.FIXED
    index_of = {
        root_name: add_link(root_name, -1, root_jtype, "root", np.zeros(3),
                            np.eye(3), np.zeros(3), math.inf)
    }

    # Depth-first in declaration order keeps coordinates parent-before-child.
    stack = list(reversed(children_of.get(root_name, [])))
    while stack:
        j = joints[stack.pop()]
        parent_idx = index_of[j["parent"]]
        index_of[j["child"]] = add_link(
            j["child"], parent_idx, j["type"], j["name"], j["axis"],
            j["R"], j["p"], j["effort"], j["lower"], j["upper"])
        stack.extend(reversed(children_of.get(j["child"], [])))

    if len(index_of) != len(link_elems):
        missing = sorted(set(link_elems) - set(index_of))
        raise ModelParseError(f"links not connected to the tree: {missing}", "robot")

    return RobotModel(links, floating_base)


def load_model(path, floating_base=None) -> RobotModel:
    with open(path, "r", encoding="utf-8") as f:
        return parse_model(f.read(), floating_base=floating_base)

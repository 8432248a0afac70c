import json
import math

import pytest

from effortcrit.model import AgentState, ReachParams


@pytest.fixture
def params():
    return ReachParams()


def agent(x=0.0, y=0.0, heading=0.0, vx=0.0, vy=0.0, a=0.0, length=4.5, width=1.8, ident="o", label="car"):
    return AgentState(ident, label, (x, y), heading, length, width, (vx, vy), a)


def moving(x, y, heading, speed, a=0.0, length=4.5, width=1.8, ident="o"):
    return agent(x, y, heading, speed * math.cos(heading), speed * math.sin(heading), a, length, width, ident)


def write_scene(path, frames, scene_id="s0", t_cycle=0.5):
    lines = [json.dumps({"scene_id": scene_id, "t_cycle": t_cycle})]
    lines += [json.dumps(f) for f in frames]
    path.write_text("\n".join(lines) + "\n")
    return path


def ego_rec(vx=0.0, x=0.0, y=0.0):
    return {"x": x, "y": y, "heading": 0.0, "vx": vx, "vy": 0.0, "a": 0.0, "length": 4.5, "width": 1.8}


def obj_rec(ident, x, y=0.0, vx=0.0, cls="car", score=None, **kw):
    rec = {"id": ident, "class": cls, "x": x, "y": y, "heading": 0.0, "vx": vx, "vy": 0.0, "a": 0.0,
           "length": 4.5, "width": 1.8}
    rec.update(kw)
    if score is not None:
        rec["score"] = score
    return rec


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

"""
Wall clock profiling of the EM pipeline.

Timed blocks form a tree: a block opened while another one is running becomes its child.
apps/config.py switches collection on for --profile and logs summarizeLabelNodes() of the
root once the command finishes, so a fit shows how the time splits between the E-step
and every M-substep.
"""
import time, functools
from collections import OrderedDict

# profilingData[0] is the root; the rest of the list is the stack of open blocks.
profilingData = [OrderedDict({"Label": "Root", "BreakUp": []})]

# Off unless an app is launched with --profile.
profilingEnabled = False

def enableProfiling(flag=True):
    global profilingEnabled
    profilingEnabled = bool(flag)

def resetProfilingData():
    del profilingData[1:]
    profilingData[0]["BreakUp"] = []

def methodProfiler(method):
    """
    Decorator timing every call of method under its qualified name.

    @methodProfiler
    def mstep_theta(...):
        ...
    """
    @functools.wraps(method)
    def wrapper(*args, **kw):
        with blockProfiler(method.__qualname__):
            return method(*args, **kw)
    return wrapper

def summarizeLabelNodes(labelDesc):
    """
    Folds one node, or a list of nodes sharing a label, into
        {"Count", "MilliSeconds", "SelfMilliSeconds", "BreakUp"}
    where SelfMilliSeconds excludes the time of timed children and BreakUp holds the
    same summary per child label, in first seen order.
    """
    if isinstance(labelDesc, dict):
        labelNodes = [labelDesc]
    elif isinstance(labelDesc, list):
        labelNodes = labelDesc
    else:
        raise TypeError("Cannot summarize {0}".format(type(labelDesc)))

    grouped = OrderedDict()
    total = 0.0
    childTotal = 0.0
    for node in labelNodes:
        total += node.get("MilliSeconds", 0.0)
        for child in node["BreakUp"]:
            grouped.setdefault(child["Label"], []).append(child)
            childTotal += child.get("MilliSeconds", 0.0)

    # The root is never timed itself; report the sum of its children instead.
    if not any("MilliSeconds" in node for node in labelNodes):
        total = childTotal

    return OrderedDict([
        ("Count", len(labelNodes)),
        ("MilliSeconds", total),
        ("SelfMilliSeconds", max(total - childTotal, 0.0)),
        ("BreakUp", OrderedDict((label, summarizeLabelNodes(nodes)) for label, nodes in grouped.items())),
    ])

class blockProfiler(object):
    """
    Times a code block when profiling is enabled; a no-op otherwise.

    with blockProfiler("mstep_W"):
        ...
    """
    def __init__(self, label):
        self.curNode = OrderedDict({"Label": label, "BreakUp": []})
        self.active = False

    def __enter__(self):
        self.active = profilingEnabled
        if self.active:
            profilingData.append(self.curNode)
            self.start = time.perf_counter()
        return self.curNode

    def __exit__(self, exception_type, exception_value, traceback):
        if not self.active:
            return
        self.curNode["MilliSeconds"] = (time.perf_counter() - self.start) * 1000.0
        self.curNode.move_to_end("BreakUp")
        profilingData.pop()
        profilingData[-1]["BreakUp"].append(self.curNode)

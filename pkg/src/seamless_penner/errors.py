"""Exception hierarchy shared by all modules."""


class SeamlessError(Exception):
    """Base class for every error raised by this package."""


# mesh construction
class MeshError(SeamlessError):
    pass


class NonManifoldEdge(MeshError):
    pass


class NonManifoldVertex(MeshError):
    pass


class BoundaryDetected(MeshError):
    pass


class InconsistentOrientation(MeshError):
    pass


class Disconnected(MeshError):
    pass


# metric / flips
class TriangleInequalityViolated(SeamlessError):
    def __init__(self, faces):
        self.faces = list(faces)
        head = ", ".join(str(f) for f in self.faces[:8])
        more = "" if len(self.faces) <= 8 else f" (+{len(self.faces) - 8} more)"
        super().__init__(f"triangle inequality violated in faces {head}{more}")


class DegenerateAngle(SeamlessError):
    pass


class UnflippableEdge(SeamlessError):
    pass


class FlipLimitExceeded(SeamlessError):
    pass


# holonomy
class InvalidSignature(SeamlessError):
    def __init__(self, reasons):
        self.reasons = list(reasons)
        super().__init__("invalid holonomy signature: " + ", ".join(self.reasons))


class LoopInvalidated(SeamlessError):
    pass


# solver / preprocessing / layout
class LinearSolveFailed(SeamlessError):
    pass


class LineSearchStalled(SeamlessError):
    pass


class InterpolationFailed(SeamlessError):
    pass


class DegenerateFace(SeamlessError):
    pass

"""Exception hierarchy shared by all pivotplan modules."""


class PivotPlanError(Exception):
    """Base class for library errors."""


class ParseError(PivotPlanError):
    pass


class DegenerateMesh(PivotPlanError):
    pass


class NoGraspFound(PivotPlanError):
    pass


class EmptyRange(PivotPlanError):
    """No collision-free gripper angle exists for a grasp."""


class DegenerateFrame(PivotPlanError):
    pass


class ConeDegenerate(PivotPlanError):
    """The projected friction cone is unbounded (tilt >= atan(1/mu))."""


class Boundary(PivotPlanError):
    """A decisive planar quantity lies inside the tie tolerance."""


class EmptyIntersection(PivotPlanError):
    pass


class DimensionMismatch(PivotPlanError):
    pass


class NotPSD(PivotPlanError):
    pass


class NoStablePlacement(PivotPlanError):
    pass


class ModelMismatch(PivotPlanError):
    pass


class PlanningInfeasible(PivotPlanError):
    """Raised by the one-grasp planner; ``stage`` names the gate that failed."""

    STAGES = ("WorkspaceRotation", "EmptyAngleWindow", "RotationQP", "TranslationQP")

    def __init__(self, stage, message=""):
        if stage not in self.STAGES:
            raise ValueError(f"unknown stage {stage!r}")
        self.stage = stage
        super().__init__(f"{stage}: {message}" if message else stage)


class NoPlan(PivotPlanError):
    def __init__(self, message="", trace=None):
        self.trace = list(trace or [])
        super().__init__(message or "no plan found")

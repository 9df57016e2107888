"""Convert IFC building models and occupant traces into BRICK knowledge graphs."""
from ._kernels import BACKEND
from .brick import BrickGraph, Literal, Mode, build_graph
from .diff import diff_by_source_id
from .geo import GeoSample, SiteTransform, utm_to_wgs84, wgs84_to_utm
from .ifc import BuildingModel, extract_model, load_model
from .inference import RelationSet, infer_all
from .occupants import filter_defined, load_occupants, localize
from .pipeline import RunConfig, convert
from .step import StepFile, parse_step, read_step
from .turtle import parse_turtle, serialize_turtle

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BrickGraph", "BuildingModel", "GeoSample", "Literal", "Mode", "RelationSet",
    "RunConfig", "SiteTransform", "StepFile", "build_graph", "convert", "diff_by_source_id",
    "extract_model", "filter_defined", "infer_all", "load_model", "load_occupants", "localize",
    "parse_step", "parse_turtle", "read_step", "serialize_turtle", "utm_to_wgs84", "wgs84_to_utm",
]

"""Memory-light event-camera noise filtering with a time-binned Bloom filter (BF2)."""
from .bf2 import Bf2, Bf2Config, SearchResult
from .estimators import (BafFilter, Bf2Filter, GuoStcfFilter, HashHeatFilter, OnfFilter,
                         check_events, make_filter)
from .events import Event, Label, LabeledStream, SensorGeometry, load_stream, mix_streams, save_stream
from .h3 import H3Family, new_family
from .stcf import Classification, StcfParams, classify, process_stream

__version__ = "0.1.0"

__all__ = [
    "Bf2", "Bf2Config", "SearchResult", "BafFilter", "Bf2Filter", "GuoStcfFilter",
    "HashHeatFilter", "OnfFilter", "check_events", "make_filter", "Event", "Label",
    "LabeledStream", "SensorGeometry", "load_stream", "mix_streams", "save_stream",
    "H3Family", "new_family", "Classification", "StcfParams", "classify", "process_stream",
]

"""Automatic labeling of radar detections from GNSS-tracked vulnerable road users."""

from .errors import InputError, InvariantError, OutOfRangeError, TimeAlignmentError
from .geomath import EgoPose, EnuPoint, GeoFix, SensorMount
from .pipeline import (BACKGROUND, EgoFix, LabeledDetection, PipelineConfig, RadarDetection,
                       RadarFrame, RunReport, label_frame, run)
from .trajectory import CYCLIST, PEDESTRIAN, MotionEstimate, SmoothedTrack, VruTrack

__version__ = "0.1.0"

"""Phonological annotation of sign-language video from pose keypoints.

Reads per-frame pose estimates, trims each video to the sign, derives
handedness, handshape features, finger orientation and hand location, trains
classifiers for those parameters and screens orientation/location pairs for
statistical co-dependence.
"""

__version__ = "0.1.0"

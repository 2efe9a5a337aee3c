"""Microphone-free speech-duration estimation from abdominal-motion sensor streams."""

__version__ = "0.1.0"

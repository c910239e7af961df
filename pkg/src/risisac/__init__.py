"""Joint waveform, receive-filter and active-RIS design for STAP-based ISAC."""

__version__ = "0.1.0"

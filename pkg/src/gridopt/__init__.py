"""DC/AC network matrices, economic dispatch and DC optimal power flow with LMPs."""

__version__ = "0.1.0"

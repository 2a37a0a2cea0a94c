from ._cavsim import *  # noqa: F401,F403

"""opengke - Group key exchange with single-broadcast rekeying, eviction and
mass join, plus a deterministic multi-party simulator"""

__version__ = '0.1.0'

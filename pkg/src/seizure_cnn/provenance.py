"""Content hashes and derived seeds."""
import hashlib
import json
from typing import Any


def hash_data(data: Any) -> str:
    """Generate SHA256 hash of JSON-serializable data.

    Keys are sorted so logically equal dicts hash equally.

    Args:
        data: Any JSON-serializable data (dict, list, str, etc.)

    Returns:
        Hexadecimal SHA256 hash string.
    """
    json_str = json.dumps(data, sort_keys=True, default=str)
    return hashlib.sha256(json_str.encode()).hexdigest()


def derive_seed(master_seed: int, *parts: str) -> int:
    """Deterministic 63-bit seed from a master seed and labels.

    The same (master_seed, parts) always yields the same seed, independent of
    call order, so per-subject seeds do not depend on how subjects are listed.
    """
    digest = hashlib.sha256(":".join([str(master_seed), *parts]).encode()).digest()
    return int.from_bytes(digest[:8], "little") & ((1 << 63) - 1)

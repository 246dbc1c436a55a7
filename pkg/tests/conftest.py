import sys
from pathlib import Path

# make tests/oracles importable as ``oracles``
sys.path.insert(0, str(Path(__file__).resolve().parent))

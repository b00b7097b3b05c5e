import sys
from pathlib import Path

# Make the shared builders in tests/support.py importable as `support`.
sys.path.insert(0, str(Path(__file__).parent))

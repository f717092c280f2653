import sys
from pathlib import Path

# Make the sibling oracle helpers importable from every test module.
sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"

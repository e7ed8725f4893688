"""Build the extension with cargo and copy it next to this script as archvar_py.so.

Usage: python3 python/build_ext.py [--debug]
(`maturin develop -m crates/py/Cargo.toml` works too where maturin is installed.)
"""

import os
import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    release = "--debug" not in sys.argv[1:]
    cmd = ["cargo", "build", "-p", "archvar-py"] + (["--release"] if release else [])
    env = dict(os.environ, PYO3_PYTHON=sys.executable)
    subprocess.run(cmd, cwd=ROOT, check=True, env=env)
    profile = "release" if release else "debug"
    suffix = {"darwin": ".dylib", "win32": ".dll"}.get(sys.platform, ".so")
    prefix = "" if sys.platform == "win32" else "lib"
    built = ROOT / "target" / profile / f"{prefix}archvar_py{suffix}"
    target = Path(__file__).resolve().parent / ("archvar_py.pyd" if sys.platform == "win32" else "archvar_py.so")
    shutil.copy2(built, target)
    print(f"copied {built} -> {target}")


if __name__ == "__main__":
    main()

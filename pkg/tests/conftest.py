from pathlib import Path

import pytest

MODELS = Path(__file__).resolve().parent.parent / "demos" / "models"

SELF_LOOP = """\
space X dims=1 axis=0:1:1
cbrane c1 space=X m=const(5)
tbrane t1 space=X r=const(1)
hcarrier c1 -> t1 h=const(2)
wcarrier t1 -> c1 op=constdep(const(2),any)
mode chtw
"""


@pytest.fixture
def figure2_text():
    return (MODELS / "figure2.chtw").read_text()


@pytest.fixture
def write_model(tmp_path):
    def _write(text, name="model.chtw"):
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write

import numpy as np
import pytest

from ccmorph import morphometry as mo
from ccmorph.phantoms import (
    half_annulus_contour,
    half_annulus_landmarks,
    rectangle_contour,
    rectangle_landmarks,
)
from ccmorph.triangulate import triangulate


@pytest.fixture(scope="session")
def square_mesh():
    from ccmorph.contour import Polyline

    sq = Polyline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), closed=True)
    return triangulate(sq, 0.005)


@pytest.fixture(scope="session")
def rect_case():
    """Rectangle 20 x 3 phantom: contour, mesh, landmarks, midline, Laplace field."""
    contour = rectangle_contour()
    mesh = triangulate(contour, 0.25)
    lm = rectangle_landmarks()
    line, f = mo.intercallosal_line(mesh, lm, 100)
    return {"contour": contour, "mesh": mesh, "lm": lm, "line": line, "f": f}


@pytest.fixture(scope="session")
def annulus_case():
    """Half-annulus r 2..4 phantom at max_area 0.01 (FEM-grade resolution)."""
    contour = half_annulus_contour()
    mesh = triangulate(contour, 0.01)
    lm = half_annulus_landmarks()
    line, f = mo.intercallosal_line(mesh, lm, 100)
    return {"contour": contour, "mesh": mesh, "lm": lm, "line": line, "f": f}

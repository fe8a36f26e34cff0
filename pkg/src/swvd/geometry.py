"""Small convex-polygon helpers (clipping, areas, centroids)."""
import numpy as np


def polygon_area_centroid(poly):
    """Signed area and centroid of a simple polygon given as (n,2) points."""
    poly = np.asarray(poly, dtype=np.float64)
    if len(poly) < 3:
        return 0.0, np.zeros(2)
    x, y = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cr = x * yn - xn * y
    a = 0.5 * cr.sum()
    if a == 0.0:
        return 0.0, poly.mean(axis=0)
    cx = ((x + xn) * cr).sum() / (6.0 * a)
    cy = ((y + yn) * cr).sum() / (6.0 * a)
    return a, np.array([cx, cy])


def clip_halfplane(poly, n, alpha):
    """Part of a convex polygon with n . x >= alpha (Sutherland-Hodgman step)."""
    out = []
    m = len(poly)
    if m == 0:
        return np.zeros((0, 2))
    s = np.asarray(poly) @ np.asarray(n) - alpha
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        sp, sq = s[i], s[(i + 1) % m]
        if sp >= 0:
            out.append(p)
        if (sp >= 0) != (sq >= 0):
            t = sp / (sp - sq)
            out.append(p + t * (q - p))
    return np.array(out) if out else np.zeros((0, 2))


def clip_convex(subject, clip):
    """Intersection of two convex counterclockwise polygons."""
    poly = np.asarray(subject, dtype=np.float64)
    clip = np.asarray(clip, dtype=np.float64)
    m = len(clip)
    for i in range(m):
        a, b = clip[i], clip[(i + 1) % m]
        e = b - a
        n = np.array([-e[1], e[0]])        # inward normal for ccw clip polygon
        poly = clip_halfplane(poly, n, float(n @ a))
        if len(poly) == 0:
            break
    return poly


def triangle_area(tri):
    tri = np.asarray(tri, dtype=np.float64)
    return 0.5 * ((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
                  - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1]))


def barycentric(tri, p):
    tri = np.asarray(tri, dtype=np.float64)
    a, b, c = tri
    d = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
    l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / d
    l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / d
    return np.array([l1, l2, 1.0 - l1 - l2])

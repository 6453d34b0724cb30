from .boundary_curve import BoundaryCurve
from .raster import BinaryImage, rasterize, pixel_centers, threshold, GRID, DOMAIN_SIZE

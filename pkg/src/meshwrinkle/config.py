"""Default configuration values."""

DEFAULT_STRENGTH = 10.0  # tension scale s
DEFAULT_BIAS = 0.0  # tension offset b
DEFAULT_EXPANSION_ITERS = 0  # >0 dilate, <0 erode the expansion channel
DEFAULT_COMPRESSION_ITERS = 0  # >0 dilate, <0 erode the compression channel
MAX_PROPAGATION_ITERS = 64  # sanity bound on |iters|
EDGE_EPSILON = 1e-9  # base edges shorter than this are left out of the mean

DEFAULT_BETA = 10.0  # softmax temperature for wrinkle-map weights
DEFAULT_TAU = 3.0  # fine-mask threshold in standard deviations
DEFAULT_DILATE_PX = 2  # fine-mask dilation rounds (8-neighbourhood)
DEFAULT_RESOLUTION = 1024  # bake resolution in texels
DEFAULT_FAILURE_THRESHOLD = 10.0  # NME percent above which an image fails
DEFAULT_PAIRING = "index"  # eyelid pairing for aperture: "index" or "nearest-x"

OBJ_PRECISION = 9  # significant digits when writing OBJ coordinates
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_IO = 3

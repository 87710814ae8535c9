"""Configuration settings for the MS-TGN toolkit."""

import os
from pathlib import Path

# Load .env file if available
try:
    from dotenv import load_dotenv
    env_path = Path(__file__).parent.parent / '.env'
    if env_path.exists():
        load_dotenv(env_path)
except ImportError:
    pass

# Output/Logging
OUTPUT_DIR = os.environ.get('MSTGN_OUTPUT_DIR', './runs/')
LOG_LEVEL = os.environ.get('MSTGN_LOG_LEVEL', 'INFO')

# Network
DEFAULT_CHANNELS = [64, 64, 64, 64, 128, 128, 128, 256, 256, 256]
# Halve time on the layer before each width increase
DEFAULT_STRIDES = [1, 1, 1, 2, 1, 1, 2, 1, 1, 1]
DEFAULT_TEMPORAL_KERNEL = 3
BASELINE_TEMPORAL_KERNEL = 9
DEFAULT_NUM_CLASSES = 60
DEFAULT_INPUT_FRAMES = 300
DEFAULT_SCALES = ('full', 'part', 'core')
BN_MOMENTUM = 0.1
BN_EPS = 1e-5

# Training
DEFAULT_BASE_LR = 0.1
DEFAULT_MOMENTUM = 0.9
DEFAULT_BATCH_SIZE = 32
DEFAULT_EPOCHS = 50
DEFAULT_LR_DECAY_EPOCHS = [30, 40]
DEFAULT_LR_DECAY_FACTOR = 0.1
DEFAULT_WEIGHT_DECAY = 1e-4

# Checks
GRADCHECK_EPSILON = 1e-5
GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_SEEDS = 20

# Cost accounting input [N, C, T, V, M]
COUNT_INPUT_SHAPE = (1, 3, 300, 25, 2)

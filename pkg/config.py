import os

class Config:
    # Application configuration
    VERSION = '0.1.0'
    TOOL_NAME = 'clockskew'
    LOG_LEVEL = os.environ.get('CLOCKSKEW_LOG_LEVEL', 'WARNING').upper()

    # Monte-Carlo configuration
    DEFAULT_SEED = int(os.environ.get('CLOCKSKEW_SEED', 0))
    DEFAULT_TRIALS = int(os.environ.get('CLOCKSKEW_TRIALS', 20000))
    DEFAULT_THREADS = int(os.environ.get('CLOCKSKEW_THREADS', 1))
    NOISE_COV_MIN_TRIALS = 1000

    # Clock and channel defaults
    DEFAULT_BETA0 = 0.0
    DEFAULT_BETA1 = 1.0
    DEFAULT_DELAY = 0.0
    DEFAULT_SIGMA = 0.1

    # Schedule defaults
    DEFAULT_ROUNDS = 20
    DEFAULT_H_STEP = 10.0
    DEFAULT_G_STEP = 10.0
    DEFAULT_T1_ORIGIN = 0.0
    DEFAULT_T4_OFFSET = 5.0

    # Output configuration
    CSV_FLOAT_FORMAT = '%.17g'
    OUTPUT_FORMATS = ('csv', 'json')

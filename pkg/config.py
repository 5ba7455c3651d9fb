import os
from dotenv import load_dotenv, dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from errors import ConfigError

load_dotenv()

OUTPUT_BASE_DIR = os.environ.get('OUTPUT_BASE_DIR', 'outputs')

# Console verbosity. The rotating log file always records DEBUG.
LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')

# Environment variable overriding the seed of any config file (but not an explicit --seed flag).
# Read on every load_settings call.
SEED_ENV_VAR = 'SKF_SEED'

# Filenames shared between the commands.
CHECKPOINT_FILENAME = 'model.skf'
REPORT_TEXT_FILENAME = 'report.txt'
REPORT_CSV_FILENAME = 'report.csv'
MIXTURE_FILENAME = 'mixture.wav'
VOICE_FILENAME = 'voice.wav'
ACCOMPANIMENT_FILENAME = 'accompaniment.wav'
# Paired layout: mixture.wav + target.wav, target taken as the source whatever Settings.target says.
TARGET_FILENAME = 'target.wav'
VOICE_STEM_NAMES = ('vocals', 'voice')



class TrainConfig(BaseModel):
    """Optimizer hyperparameters plus the dimensions the model is built with."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    learning_rate: float = Field(default=1e-3, ge=0.0)
    batch_size: int = Field(default=16, ge=1)
    clip_norm: float = Field(default=0.35, gt=0.0)
    lambda_l2: float = Field(default=1e-4, ge=0.0)
    patience: int = Field(default=2, ge=1)
    max_epochs: int = Field(default=300, ge=1)
    seed: int = Field(default=0, ge=0)
    n_bins: int = Field(default=1025, ge=1)
    segment_frames: int = Field(default=18, ge=1)
    context_frames: int = Field(default=3, ge=0)
    hidden: int | None = None

    @model_validator(mode='after')
    def _check_dims(self):
        if self.segment_frames <= 2 * self.context_frames:
            raise ValueError("context exceeds segment")
        if self.hidden is not None and self.hidden != self.n_bins:
            raise ValueError(f"hidden ({self.hidden}) must equal n_bins ({self.n_bins})")
        return self


class Settings(BaseModel):
    """All knobs of the toolkit. Defaults are the full-size 44.1 kHz setup."""
    model_config = ConfigDict(extra='forbid', frozen=True)

    sample_rate: int = Field(default=44100, gt=0)
    n_fft: int = Field(default=2048, ge=2)
    hop: int = Field(default=256, ge=1)
    segment_frames: int = Field(default=18, ge=1)
    context_frames: int = Field(default=3, ge=0)
    learning_rate: float = Field(default=1e-3, ge=0.0)
    batch_size: int = Field(default=16, ge=1)
    clip_norm: float = Field(default=0.35, gt=0.0)
    lambda_l2: float = Field(default=1e-4, ge=0.0)
    patience: int = Field(default=2, ge=1)
    max_epochs: int = Field(default=300, ge=1)
    seed: int = Field(default=0, ge=0)
    # None picks the strategy default (1.7 for GRU-S/GRU-D, 2 for GRU-DWF).
    alpha: float | None = Field(default=None, gt=0.0, le=2.0)
    target: str = Field(default='voice', pattern='^(voice|accompaniment)$')

    @model_validator(mode='after')
    def _check_framing(self):
        if self.n_fft % 2:
            raise ValueError("n_fft must be even")
        if self.hop > self.n_fft:
            raise ValueError("hop must not exceed n_fft")
        if self.segment_frames <= 2 * self.context_frames:
            raise ValueError("context exceeds segment")
        return self

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            clip_norm=self.clip_norm,
            lambda_l2=self.lambda_l2,
            patience=self.patience,
            max_epochs=self.max_epochs,
            seed=self.seed,
            n_bins=self.n_bins,
            segment_frames=self.segment_frames,
            context_frames=self.context_frames,
        )


def load_settings(config_path: str | None = None, overrides: dict | None = None) -> Settings:
    """
    Builds Settings from defaults, an optional key=value file, SKF_SEED and overrides.
    Later sources win; None values in overrides are ignored so unset flags fall through.
    """
    values = {}

    if config_path:
        if not os.path.isfile(config_path):
            raise ConfigError(f"Config file not found: {config_path}")
        # dotenv_values は KEY=VALUE 形式を辞書にするだけで、os.environ には書き込まない
        for key, value in dotenv_values(config_path).items():
            values[key.strip().lower()] = value

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        values['seed'] = env_seed

    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    try:
        return Settings(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e

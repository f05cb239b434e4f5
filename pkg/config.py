import os
from dataclasses import dataclass
from dotenv import load_dotenv

# Load .env as early as possible so os.getenv picks them up
load_dotenv()

@dataclass
class Settings:
    threads: int = int(os.getenv("AN_SIM_THREADS", "0"))
    log_level: str = os.getenv("AN_SIM_LOG_LEVEL", "INFO")
    default_trials: int = int(os.getenv("AN_SIM_TRIALS", "200"))
    default_seed: int = int(os.getenv("AN_SIM_SEED", "20170101"))
    out_dir: str = os.getenv("AN_SIM_OUT_DIR", "results")

    @property
    def worker_threads(self) -> int:
        """
        Worker cap for Monte Carlo trials.
        AN_SIM_THREADS unset or 0 means one worker per CPU.
        """
        if self.threads > 0:
            return self.threads
        return max(os.cpu_count() or 1, 1)

settings = Settings()

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # First value of the fresh-name counter (``<base>%<n>``) of every query.
    SFM1_SEED: int = 1

    # Largest automaton (in states) accepted by the isomorphism matcher.
    ISO_NODE_LIMIT: int = 64

    LOG_LEVEL: str = "WARNING"

    # Re-run the checker on every proof the CLI emits.
    SELF_CHECK: bool = True

    model_config = {"env_file": ".env", "extra": "ignore"}


settings = Settings()

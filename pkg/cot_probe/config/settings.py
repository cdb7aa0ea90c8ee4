"""Process-level settings from environment variables."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings from environment variables."""

    model_config = SettingsConfigDict(
        case_sensitive=False,
        extra="ignore",
        env_file_encoding="utf-8",
        populate_by_name=True,
    )

    # Ключ нужен только для live-бэкенда
    openrouter_api_key: str | None = Field(
        default=None, description="API key for the chat-completions endpoint"
    )
    openrouter_base_url: str = Field(
        default="https://openrouter.ai/api/v1",
        description="OpenAI-compatible endpoint base URL",
    )

    log_level: str = Field(
        default="INFO", alias="COT_PROBE_LOG_LEVEL", description="Root log level"
    )
    read_timeout_sec: float = Field(
        default=120.0, alias="COT_PROBE_READ_TIMEOUT_SEC", description="HTTP read timeout"
    )
    max_parallel: int = Field(
        default=8, ge=1, alias="COT_PROBE_MAX_PARALLEL", description="In-flight request limit"
    )
    mask_char: str = Field(
        default="■", alias="COT_PROBE_MASK_CHAR", description="Default mask character"
    )


# Глобальная переменная для настроек (ленивая инициализация)
_settings: Settings | None = None


def get_settings() -> Settings:
    """Получить настройки приложения."""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Сбросить кэш настроек (нужно тестам, меняющим окружение)."""
    global _settings
    _settings = None

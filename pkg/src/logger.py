# src/logger.py
import sys

# ANSI escape codes
RESET = "\033[0m"
RED = "\033[31m"
GREEN = "\033[32m"
YELLOW = "\033[33m"
MAGENTA = "\033[35m"
CYAN = "\033[36m"
WHITE = "\033[37m"
BRIGHT_BLACK = "\033[90m"
BRIGHT_RED = "\033[91m"
BRIGHT_BLUE = "\033[94m"
BRIGHT_CYAN = "\033[96m"

LEVELS = {
    "COMPONENT": (BRIGHT_BLACK, "🔄 "),
    "SYNTH": (BRIGHT_BLUE, "🎨 "),
    "EXTRACT": (CYAN, "🧮 "),
    "TRAIN": (MAGENTA, "🌲 "),
    "EVAL": (BRIGHT_CYAN, "📊 "),
    "BENCH": (YELLOW, "⏱️ "),
    "SWEEP": (BRIGHT_BLUE, "🧭 "),
    "RESULT": (GREEN, "✅ "),
    "WARNING": (YELLOW, "⚠️ "),
    "ERROR": (BRIGHT_RED, "❌ "),
}

_use_color = True


def set_color(enabled: bool):
    """Turns ANSI coloring on or off for every subsequent log line."""
    global _use_color
    _use_color = enabled


def log_message(
    level: str,
    message: str,
    color: str = WHITE,
    symbol: str = "",
    end: str = "\n",
):
    """
    Color-coded, concise output for pipeline stages.

    Args:
        level (str): The stage of the log line (e.g. "SYNTH", "TRAIN", "WARNING", "ERROR").
        message (str): The message content.
        color (str): ANSI color used when the level is not in the level map.
        symbol (str): Symbol used when the level is not in the level map.
        end (str): What to append after the message (defaults to newline).
    """
    lvl_color, lvl_symbol = LEVELS.get(level, (color, symbol))

    if _use_color:
        log_string = f"{lvl_color}{lvl_symbol}{message}{RESET}"
    else:
        log_string = f"[{level}] {message}"

    stream = sys.stderr if level == "ERROR" else sys.stdout
    stream.write(log_string + end)
    stream.flush()

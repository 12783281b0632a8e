"""
Entry point: uv run python main.py <command> [flags]
"""

from cli import main


if __name__ == "__main__":
    main()

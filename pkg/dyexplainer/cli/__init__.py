"""Command-line interface: `dyexplainer <command> [-c config.json] [key=value ...]`."""

#!/usr/bin/env python3
"""
indii - 主启动脚本
"""
import sys

from indii.cli.main import main

if __name__ == "__main__":
    sys.exit(main())

#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
随机场 Potts 工具箱 - 命令行入口
"""
import sys

from src.cli.main import main

if __name__ == "__main__":
    sys.exit(main())

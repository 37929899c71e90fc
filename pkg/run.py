#!/usr/bin/env python3
"""
Simple script to run the region bound FastAPI server
"""

import uvicorn
import os
from pathlib import Path

if __name__ == "__main__":
    # Set the working directory to the project folder
    project_dir = Path(__file__).parent
    os.chdir(project_dir)

    from config import settings

    uvicorn.run(
        "main:app",
        host=settings.host,
        port=settings.port,
        reload=settings.debug,
        log_level=settings.log_level.lower(),
        access_log=True
    )

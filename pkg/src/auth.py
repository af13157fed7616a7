from typing import Optional

from fastapi import HTTPException, Security
from fastapi.security.api_key import APIKeyHeader

import core

API_KEY_NAME = "X-API-KEY"

api_key_header = APIKeyHeader(name=API_KEY_NAME, auto_error=False)


def validate_api_key(api_key: Optional[str] = Security(api_key_header)):
    # No key configured: the service is open
    if not core.API_KEY:
        return None
    if api_key != core.API_KEY:
        raise HTTPException(status_code=401, detail="Invalid API Key")
    return api_key

import os
from typing import List

from core import DATA_FOLDER
from errors import CcdfgError
from logger import logger
from textio import parse_ccdfg
from validators import validate_pipelinable

DESIGN_SUFFIX = ".ccdfg"


def load_design(path: str):
    with open(path, "rb") as f:
        return parse_ccdfg(f.read())


def load_corpus(folder: str = DATA_FOLDER) -> List[dict]:
    """
    Parses every design file in a folder and validates the sequential ones.
    Returns one status record per file, in file name order.
    """
    files = sorted(f for f in os.listdir(folder) if f.endswith(DESIGN_SUFFIX))
    logger.debug(f"Found {len(files)} designs to process in {folder}")

    processed_files = []
    for file in files:
        file_path = os.path.join(folder, file)
        logger.info(f"Processing file: {file_path}")
        kind = "SEQUENTIAL"
        try:
            document = load_design(file_path)
            if document.pipelined:
                kind = "PIPELINED"
                processed_files.append({"file": file, "type": kind, "status": "OK"})
                continue
            diagnostics = validate_pipelinable(document.design)
            if diagnostics:
                logger.warning(f"{file} is not pipelinable: {len(diagnostics)} violations")
                processed_files.append({"file": file, "type": kind, "status": "ERROR",
                                        "detail": "; ".join(str(d) for d in diagnostics)})
            else:
                processed_files.append({"file": file, "type": kind, "status": "OK"})
        except CcdfgError as e:
            logger.warning(f"Error processing {file}: {e.kind}: {e}")
            processed_files.append({"file": file, "type": kind, "status": "ERROR", "detail": f"{e.kind}: {e}"})
        except OSError as e:
            logger.error(f"Error reading {file}: {str(e)}", exc_info=True)
            processed_files.append({"file": file, "type": kind, "status": "ERROR", "detail": str(e)})

    logger.info("Corpus load completed")
    return processed_files

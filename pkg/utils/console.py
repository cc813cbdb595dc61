"""
Console progress output
[TAG] 접두사 형식의 진행 로그를 출력합니다. config.VERBOSE로 끌 수 있습니다.
"""
import config


def log(message: str) -> None:
    if config.VERBOSE:
        print(message, flush=True)


def banner(title: str) -> None:
    log("\n" + "=" * 60)
    log(title)
    log("=" * 60)

from ssdiv.main import run

run()

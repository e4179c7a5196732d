"""Two rigs, one wire: a leader daemon reaches while a follower shadows it.

Starts two lockstep daemons on loopback, links the follower's right elbow to
the leader's, ramps the leader to 90 degrees, and prints both elbows side by
side.  Everything goes over the text protocol; nothing here touches daemon
internals.

    python3 demos/link_follow.py
"""

import socket
import time

from exokit import ExoDaemon, two_arm_default


def wire(address):
    """Tiny blocking protocol client: one request line, one response line."""
    sock = socket.create_connection(address, timeout=10.0)
    buf = b""

    def send(line: str) -> str:
        nonlocal buf
        sock.sendall(line.encode() + b"\n")
        while True:
            while b"\n" not in buf:
                buf += sock.recv(4096)
            raw, buf = buf.split(b"\n", 1)
            text = raw.decode()
            if not text.startswith("T "):   # telemetry is not our answer
                return text

    # the daemon greets before anything else
    while b"\n" not in buf:
        buf += sock.recv(4096)
    greeting, buf = buf.split(b"\n", 1)
    assert greeting.decode() == "proto v1"
    return send


def main() -> None:
    leader = ExoDaemon(two_arm_default(calibrated=True), listen=("127.0.0.1", 0))
    follower = ExoDaemon(two_arm_default(calibrated=True), listen=("127.0.0.1", 0))
    leader.start()
    follower.start()
    try:
        lead = wire(leader.address)
        follow = wire(follower.address)
        host, port = leader.address
        print(follow(f"link {host}:{port} R.elbow>R.elbow:1"))
        print(lead("moveto R.elbow abs 90 1 30"))

        print(f"{'t_ms':>6} {'leader':>8} {'follower':>9}")
        for k in range(35):
            lead("step 10")
            time.sleep(0.01)            # let the frames cross the wire
            follow("step 10")
            if k % 5 == 4:
                a = float(lead("sense R.elbow").split()[1])
                b = float(follow("sense R.elbow").split()[1])
                print(f"{(k + 1) * 100:>6} {a:>8.2f} {b:>9.2f}")

        a = float(lead("sense R.elbow").split()[1])
        b = float(follow("sense R.elbow").split()[1])
        print(f"final delta {abs(a - b):.2f} deg")
    finally:
        leader.stop()
        follower.stop()


if __name__ == "__main__":
    main()

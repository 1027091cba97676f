"""Tiered layer-2 locator addressing: library and simulator."""

from .addressing import (
    BROADCAST,
    BadFanout,
    BigMac,
    DeltaByte,
    FanoutParams,
    common_prefix_len,
    expected_addresses,
    extend_address,
    format_mac,
    pack_delta,
    parse_mac,
    unpack_delta,
)
from .control import ControlServer, PolicyMode, TePolicy, select_pair
from .dataplane import Strategy, SwitchState, state_fingerprint, switch_handle
from .engine import Metrics, Simulation
from .frames import Frame
from .generate import build_regular
from .host import HostConfig, HostStack
from .scenario import RunResult, parse_scenario, run_commands
from .topofile import parse_topology, parse_topology_file, render_topology
from .topology import (
    AddressTable,
    Topology,
    assign_addresses,
    enumerate_upward_paths,
    normalize,
    path_of_address,
    validate,
)

__all__ = [
    "BROADCAST",
    "AddressTable",
    "BadFanout",
    "BigMac",
    "ControlServer",
    "DeltaByte",
    "FanoutParams",
    "Frame",
    "HostConfig",
    "HostStack",
    "Metrics",
    "PolicyMode",
    "RunResult",
    "Simulation",
    "Strategy",
    "SwitchState",
    "TePolicy",
    "Topology",
    "assign_addresses",
    "build_regular",
    "common_prefix_len",
    "enumerate_upward_paths",
    "expected_addresses",
    "extend_address",
    "format_mac",
    "normalize",
    "pack_delta",
    "parse_mac",
    "parse_scenario",
    "parse_topology",
    "parse_topology_file",
    "path_of_address",
    "render_topology",
    "run_commands",
    "select_pair",
    "state_fingerprint",
    "switch_handle",
    "unpack_delta",
    "validate",
]

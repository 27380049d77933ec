"""ROS master probing, footprinting and nature classification."""

import asyncio
import random

import pytest

from roborecon.adapters.ros import (
    Nature,
    PartialFootprintError,
    ROSNode,
    ROSSystemState,
    ROSTopic,
    RosVerdict,
    TopicCommunication,
    check_ros_master,
    classify_system,
    footprint_ros,
)
from roborecon.mocknet.decoys import ClosedPort, PlainHttpDecoy
from roborecon.mocknet.rosmaster import MockRosMaster, RosGraph, rosout_graph


def run(coro):
    return asyncio.run(coro)


async def with_master(graph_or_master, fn):
    master = graph_or_master if isinstance(graph_or_master, MockRosMaster) else MockRosMaster(graph_or_master)
    await master.start("127.0.0.1", 0)
    try:
        return await fn(master)
    finally:
        await master.aclose()


class TestCheckRosMaster:
    def test_master_with_one_node_is_ros_host(self):
        async def body(master):
            probe = await check_ros_master("127.0.0.1", master.port, 2.0)
            assert probe.verdict is RosVerdict.ROS_HOST
            return probe

        run(with_master(rosout_graph(), body))

    def test_faulting_xmlrpc_endpoint(self):
        async def body(master):
            probe = await check_ros_master("127.0.0.1", master.port, 2.0)
            assert probe.verdict is RosVerdict.XMLRPC_NOT_ROS
            assert "is not supported" in probe.detail
            return probe

        run(with_master(MockRosMaster(RosGraph(), fault_all=True), body))

    def test_closed_port_unreachable(self):
        async def body():
            closed = ClosedPort()
            await closed.start("127.0.0.1", 0)
            probe = await check_ros_master("127.0.0.1", closed.port, 2.0)
            assert probe.verdict is RosVerdict.UNREACHABLE
            assert "Connection refused" in probe.detail

        run(body())

    def test_plain_http_is_malformed(self):
        async def body():
            decoy = PlainHttpDecoy()
            await decoy.start("127.0.0.1", 0)
            try:
                probe = await check_ros_master("127.0.0.1", decoy.port, 2.0)
                assert probe.verdict is RosVerdict.MALFORMED
            finally:
                await decoy.aclose()

        run(body())


class TestFootprint:
    def test_rosout_only_master_matches_reference_footprint(self):
        async def body(master):
            state = await footprint_ros("127.0.0.1", master.port, 2.0)
            assert [n.name for n in state.nodes] == ["/rosout"]
            assert state.nodes[0].uri == "http://127.0.0.1:39719"
            assert [t.name for t in state.published_topics] == ["/rosout_agg"]
            assert [t.name for t in state.subscribed_topics] == ["/rosout"]
            assert set(state.services) == {"/rosout/set_logger_level", "/rosout/get_loggers"}
            assert len(state.communications) == 2
            assert all(t.msg_type == "rosgraph_msgs/Log" for t in state.topics)
            return state

        run(with_master(rosout_graph(), body))

    def test_publisher_subscriber_join(self):
        graph = RosGraph(
            nodes={"/talker": "http://127.0.0.1:50001", "/listener": "http://127.0.0.1:50002"},
            topics={"/chatter": "std_msgs/String"},
            publishers={"/chatter": ["/talker"]},
            subscribers={"/chatter": ["/listener"]},
        )

        async def body(master):
            state = await footprint_ros("127.0.0.1", master.port, 2.0)
            assert len(state.communications) == 1
            comm = state.communications[0]
            assert [n.name for n in comm.publishers] == ["/talker"]
            assert comm.topic == ROSTopic("/chatter", "std_msgs/String")
            assert [n.name for n in comm.subscribers] == ["/listener"]

        run(with_master(graph, body))

    def test_zero_node_master_all_lists_empty(self):
        async def body(master):
            state = await footprint_ros("127.0.0.1", master.port, 2.0)
            assert state.nodes == ()
            assert state.topics == ()
            assert state.services == ()
            assert state.communications == ()

        run(with_master(RosGraph(), body))

    def test_unresolvable_node_uri_kept_with_empty_uri(self):
        graph = RosGraph(
            nodes={},  # master cannot look anything up
            topics={"/chatter": "std_msgs/String"},
            publishers={"/chatter": ["/ghost"]},
        )

        async def body(master):
            state = await footprint_ros("127.0.0.1", master.port, 2.0)
            assert [n.name for n in state.nodes] == ["/ghost"]
            assert state.nodes[0].uri == ""

        run(with_master(graph, body))

    def test_referential_closure_random_graphs(self):
        rng = random.Random(7)
        for _ in range(5):
            node_names = [f"/node_{i}" for i in range(rng.randrange(2, 11))]
            topic_names = [f"/topic_{i}" for i in range(rng.randrange(1, 6))]
            graph = RosGraph(
                nodes={n: f"http://127.0.0.1:{40000 + i}" for i, n in enumerate(node_names)},
                topics={t: "std_msgs/String" for t in topic_names},
                publishers={t: rng.sample(node_names, rng.randrange(0, len(node_names))) for t in topic_names},
                subscribers={t: rng.sample(node_names, rng.randrange(0, len(node_names))) for t in topic_names},
                services={f"/node_0/svc_{i}": ["/node_0"] for i in range(rng.randrange(0, 3))},
            )

            async def body(master, graph=graph):
                state = await footprint_ros("127.0.0.1", master.port, 2.0)
                node_set = {n.name for n in state.nodes}
                topic_set = {t.name for t in state.topics}
                for comm in state.communications:
                    assert {n.name for n in comm.publishers} <= node_set
                    assert {n.name for n in comm.subscribers} <= node_set
                    assert comm.topic.name in topic_set
                # manifest is the oracle: communications mirror the graph join
                expected_topics = {
                    t for t in graph.topics
                    if graph.publishers.get(t) or graph.subscribers.get(t)
                }
                assert {c.topic.name for c in state.communications} == expected_topics
                for comm in state.communications:
                    assert {n.name for n in comm.publishers} == set(graph.publishers.get(comm.topic.name, []))
                    assert {n.name for n in comm.subscribers} == set(graph.subscribers.get(comm.topic.name, []))

            run(with_master(graph, body))

    def test_footprint_is_read_only(self):
        async def body(master):
            await footprint_ros("127.0.0.1", master.port, 2.0)
            assert master.mutating_calls == []
            methods = {m for m, _ in master.method_log}
            assert methods <= {"getSystemState", "lookupNode", "getTopicTypes"}

        run(with_master(rosout_graph(), body))

    def test_master_dying_mid_footprint_raises_partial(self):
        master = MockRosMaster(rosout_graph(), drop_methods=frozenset({"getTopicTypes"}))

        async def body(master):
            with pytest.raises(PartialFootprintError) as err:
                await footprint_ros("127.0.0.1", master.port, 2.0)
            partial = err.value.partial
            assert partial is not None
            assert [n.name for n in partial.nodes] == ["/rosout"]

        run(with_master(master, body))


def _state(nodes, topics=()):
    node_objs = tuple(ROSNode(n, "") for n in nodes)
    topic_objs = tuple(ROSTopic(t, "std_msgs/String") for t in topics)
    return ROSSystemState(nodes=node_objs, topics=topic_objs, services=(), communications=())


class TestClassifySystem:
    def test_rosout_only_is_empty(self):
        assert classify_system(_state(["/rosout"])) is Nature.EMPTY

    def test_no_nodes_is_empty(self):
        assert classify_system(_state([])) is Nature.EMPTY

    def test_gazebo_node_is_simulation(self):
        assert classify_system(_state(["/rosout", "/gazebo"])) is Nature.SIMULATION

    def test_marker_in_topic_is_simulation(self):
        assert classify_system(_state(["/rosout", "/robot"], ["/turtlesim/pose"])) is Nature.SIMULATION

    def test_base_controller_and_scan_is_real(self):
        assert classify_system(_state(["/rosout", "/base_controller"], ["/scan"])) is Nature.REAL

    def test_empty_checked_before_simulation(self):
        # marker in a topic cannot flip a bare master to simulation
        assert classify_system(_state(["/rosout"], ["/sim_time"])) is Nature.EMPTY

    def test_pure_function(self):
        state = _state(["/rosout", "/gazebo"])
        assert classify_system(state) is classify_system(state)

    def test_custom_markers(self):
        state = _state(["/rosout", "/webots_driver"])
        assert classify_system(state) is Nature.REAL
        assert classify_system(state, markers=("webots",)) is Nature.SIMULATION

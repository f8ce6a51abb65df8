# Regenerates connected_graphs.txt: every connected graph on 1..6 nodes up to
# isomorphism, one per line as "n: u-v u-v ...".
import networkx as nx

with open("connected_graphs.txt", "w") as f:
    for g in nx.graph_atlas_g():
        n = g.number_of_nodes()
        if 1 <= n <= 6 and nx.is_connected(g):
            f.write(f"{n}: " + " ".join(f"{u}-{v}" for u, v in sorted(g.edges())) + "\n")

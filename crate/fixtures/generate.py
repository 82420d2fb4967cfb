"""Regenerates the fixture knowledge base and notebook corpus.

Run from the repository root: python3 fixtures/generate.py
Output is deterministic; the generated files are committed.
"""

import csv
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))

CQ = "classiq.open_library.functions"
PL = "pennylane.templates"
QK = "qiskit.circuit.library"

# (framework, concept path, summary, pattern)
KB = [
    ("classiq", f"{CQ}.utility_functions.hadamard_transform",
     "Places every qubit of the register in an equal superposition by applying H to each qubit.",
     "Uniform Superposition"),
    ("classiq", f"{CQ}.qft_functions.qft",
     "Applies the quantum Fourier transform to a register, mapping computational basis states to Fourier basis states.",
     "Basis Change"),
    ("classiq", f"{CQ}.qpe.qpe",
     "Estimates the eigenphase of a unitary into a phase register using controlled powers and an inverse Fourier step.",
     "Quantum Phase Estimation (QPE)"),
    ("classiq", f"{CQ}.grover.grover_operator",
     "Builds one Grover iteration from an oracle and the diffuser around the initial state.",
     "Grover"),
    ("classiq", f"{CQ}.state_preparation.prepare_uniform_trimmed_state",
     "Prepares an equal superposition over the first m computational basis states.",
     "Initialization"),
    ("classiq", f"{CQ}.qsvt.qsvt",
     "Applies a polynomial to the singular values of a block-encoded matrix through alternating phase rotations.",
     "Quantum Singular Value Transformation (QSVT)"),
    ("classiq", f"{CQ}.lcu.lcu",
     "Implements a weighted sum of unitaries with a prepare, select, unprepare sequence on an ancilla block.",
     "Linear Combination of Unitaries"),
    ("classiq", f"{CQ}.modular_arithmetic.modular_increment",
     "Adds a classical constant to a quantum integer modulo two to the register size.",
     "Quantum Arithmetic"),
    ("classiq", f"{CQ}.lookup_table.span_lookup_table",
     "Evaluates a classical function given as a table over every input value of the register.",
     "Function Table"),
    ("classiq", f"{CQ}.state_preparation.prepare_bell_state",
     "Prepares one of the four maximally entangled two-qubit Bell states.",
     "Creating Entanglement"),
    ("classiq", f"{CQ}.hamiltonian_simulation.suzuki_trotter",
     "Approximates time evolution under a sum of Pauli terms with a product formula of given order and repetitions.",
     "Hamiltonian Simulation"),
    ("classiq", f"{CQ}.qaoa_penalty.qaoa_penalty",
     "Stacks cost and mixer layers with penalty terms for constrained combinatorial optimization.",
     "Quantum Approximate Optimization Algorithm (QAOA)"),
    ("classiq", f"{CQ}.utility_functions.apply_to_all",
     "Applies a single-qubit operation to each qubit of a register.",
     "Circuit Construction Utility"),
    ("classiq", f"{CQ}.state_preparation.inplace_prepare_amplitudes",
     "Loads a normalized vector of real amplitudes into the register in place.",
     "Data Encoding"),
    ("classiq", f"{CQ}.oracles.phase_oracle",
     "Flips the phase of basis states for which a boolean predicate evaluates to true.",
     "Oracle"),
    ("pennylane", f"{PL}.embeddings.amplitude.AmplitudeEmbedding",
     "Encodes a feature vector of length two to the n into the amplitudes of n qubits.",
     "Data Encoding"),
    ("pennylane", f"{PL}.embeddings.angle.AngleEmbedding",
     "Encodes features as rotation angles on individual qubits.",
     "Data Encoding"),
    ("pennylane", f"{PL}.embeddings.basis.BasisEmbedding",
     "Encodes a bit string into the matching computational basis state.",
     "Data Encoding"),
    ("pennylane", f"{PL}.embeddings.iqp.IQPEmbedding",
     "Encodes features into diagonal gates of an instantaneous quantum polynomial circuit used for kernels.",
     "Quantum Kernel Estimation (QKE)"),
    ("pennylane", f"{PL}.layers.strongly_entangling.StronglyEntanglingLayers",
     "Layers of general single-qubit rotations followed by entangling gates in a cyclic pattern.",
     "Variational Quantum Algorithm (VQA)"),
    ("pennylane", f"{PL}.layers.simplified_two_design.SimplifiedTwoDesign",
     "Trainable layered circuit of Pauli-Y rotations and controlled-Z pairs forming a simplified two-design.",
     "Quantum Neural Network (QNN)"),
    ("pennylane", f"{PL}.subroutines.qpe.QuantumPhaseEstimation",
     "Template that estimates the phase of an operator eigenvalue on estimation wires.",
     "Quantum Phase Estimation (QPE)"),
    ("pennylane", f"{PL}.subroutines.amplitude_amplification.AmplitudeAmplification",
     "Boosts the probability of marked states by repeated reflections.",
     "Amplitude Amplification"),
    ("pennylane", f"{PL}.subroutines.approx_time_evolution.ApproxTimeEvolution",
     "First-order Trotter circuit for evolving under a Hamiltonian for a fixed time.",
     "Hamiltonian Simulation"),
    ("pennylane", f"{PL}.state_preparations.arbitrary_state_preparation.ArbitraryStatePreparation",
     "Prepares an arbitrary state from trainable Pauli word rotation angles.",
     "Initialization"),
    ("pennylane", f"{PL}.state_preparations.mps_prep.MPSPrep",
     "Prepares a state given as a matrix product state built from successive Schmidt decompositions.",
     "Schmidt Decomposition"),
    ("pennylane", f"{PL}.subroutines.prepselprep.PrepSelPrep",
     "Block-encodes a linear combination of unitaries with prepare and select subroutines.",
     "Linear Combination of Unitaries"),
    ("pennylane", f"{PL}.subroutines.temporary_and.TemporaryAND",
     "Computes the logical AND of two control qubits into a fresh target qubit.",
     "Quantum Logical Operators"),
    ("pennylane", f"{PL}.subroutines.arithmetic.adder.Adder",
     "Adds an integer constant to a register in the Fourier basis modulo a given value.",
     "Quantum Arithmetic"),
    ("qiskit", f"{QK}.data_preparation.zz_feature_map.ZZFeatureMap",
     "Second-order Pauli-Z evolution feature map for encoding classical data.",
     "Data Encoding"),
    ("qiskit", f"{QK}.n_local.qaoa_ansatz.QAOAAnsatz",
     "Alternating cost and mixer operator ansatz for approximate optimization.",
     "Quantum Approximate Optimization Algorithm (QAOA)"),
    ("qiskit", f"{QK}.n_local.efficient_su2.efficient_su2",
     "Hardware-efficient layered circuit of SU(2) rotations and CX entanglers.",
     "Variational Quantum Algorithm (VQA)"),
    ("qiskit", f"{QK}.n_local.real_amplitudes.real_amplitudes",
     "Heuristic trial wave function with Y rotations and CX entanglement giving real amplitudes.",
     "Variational Quantum Eigensolver (VQE)"),
    ("qiskit", f"{QK}.phase_estimation.PhaseEstimation",
     "Phase estimation circuit built from controlled unitary powers and an inverse QFT.",
     "Quantum Phase Estimation (QPE)"),
    ("qiskit", f"{QK}.arithmetic.integer_comparator.IntegerComparator",
     "Compares a register value against a fixed integer and flags the result on an ancilla.",
     "Quantum Arithmetic"),
    ("qiskit", f"{QK}.pauli_evolution.PauliEvolutionGate",
     "Gate evolving a state under a Pauli operator for a given time with a chosen synthesis method.",
     "Hamiltonian Simulation"),
    ("qiskit", f"{QK}.arithmetic.exact_reciprocal.ExactReciprocal",
     "Rotates an ancilla proportionally to the reciprocal of a register value, as used in linear system solvers.",
     "Domain Specific Application"),
    ("qiskit", f"{QK}.generalized_gates.mcmt.MCMTGate",
     "Applies a gate to several targets controlled by several qubits.",
     "Circuit Construction Utility"),
    ("qiskit", f"{QK}.boolean_logic.quantum_or.OrGate",
     "Computes the logical OR of input qubits onto a result qubit.",
     "Quantum Logical Operators"),
    ("qiskit", f"{QK}.data_preparation.state_preparation.StatePreparation",
     "Prepares a target state vector from the all-zero state.",
     "Initialization"),
    ("qiskit", f"{QK}.arithmetic.linear_amplitude_function.LinearAmplitudeFunction",
     "Encodes a piecewise linear function into an ancilla amplitude for amplitude estimation.",
     "Quantum Amplitude Estimation"),
]

PATHS = {p.rsplit(".", 1)[1]: p for _, p, _, _ in KB}
SUMMARY = {p: s for _, p, s, _ in KB}


def md(text):
    return ("markdown", text)


def code(text):
    return ("code", text)


def raw(text):
    return ("raw", text)


# Each notebook: (relative path, cells, planted call names, decoy call names)
NOTEBOOKS = [
    ("qml-tutorials/01_embeddings.ipynb", [
        md("Encoding data"),
        code("!pip install pennylane\nimport pennylane as qml\nimport numpy as np\n\nx = np.array([0.1, 0.2, 0.3, 0.4])"),
        code("dev = qml.device('default.qubit', wires=2)\n\n@qml.qnode(dev)\ndef circuit(x):\n    qml.AmplitudeEmbedding(x, wires=range(2), normalize=True)\n    return qml.state()"),
        code("def angles(x):\n    qml.AngleEmbedding(x, wires=range(4))\n    qml.AngleEmbedding(x, wires=range(4), rotation='Y')\n    return qml.probs(wires=0)"),
    ], ["AmplitudeEmbedding", "AngleEmbedding"], []),
    ("qml-tutorials/02_kernels.ipynb", [
        md("Kernel method"),
        code("import pennylane as qml\n\ndef kernel(a, b):\n    qml.IQPEmbedding(a, wires=range(3))\n    qml.adjoint(qml.IQPEmbedding)(b, wires=range(3))\n    return qml.probs(wires=range(3))"),
        code("values = [kernel(a, b) for a in data for b in data]\nprint(len(values))"),
    ], ["IQPEmbedding"], ["embedding"]),
    ("qml-tutorials/03_layers.ipynb", [
        code("%matplotlib inline\nimport pennylane as qml\nshape = qml.StronglyEntanglingLayers.shape(n_layers=2, n_wires=3)"),
        code("def model(w):\n    qml.BasisEmbedding([1, 0, 1], wires=range(3))\n    qml.StronglyEntanglingLayers(w, wires=range(3))\n    return qml.expval(qml.PauliZ(0))"),
        md("Training loop"),
        code("for step in range(10):\n    w = opt.step(cost, w)"),
    ], ["StronglyEntanglingLayers", "BasisEmbedding"], []),
    ("qml-tutorials/advanced/04_two_design.ipynb", [
        code("import pennylane as qml\n\ndef net(init, weights):\n    qml.SimplifiedTwoDesign(initial_layer_weights=init, weights=weights, wires=range(4))\n    return [qml.expval(qml.PauliZ(i)) for i in range(4)]"),
        code("params = make_params(4)\nresult = net(*params)"),
    ], ["SimplifiedTwoDesign"], ["su2_layer"]),
    ("qml-tutorials/advanced/05_state_prep.ipynb", [
        md("State preparation"),
        code("import pennylane as qml\n\ndef prep(weights):\n    qml.ArbitraryStatePreparation(weights, wires=[0, 1])\n    qml.TemporaryAND(wires=[0, 1, 2])\n    return qml.state()"),
    ], ["ArbitraryStatePreparation", "TemporaryAND"], []),
    ("chemistry-lab/trotter/evolution.ipynb", [
        md("Time evolution"),
        code("import pennylane as qml\nfrom qiskit.circuit.library import PauliEvolutionGate\n\nqml.ApproxTimeEvolution(hamiltonian, 0.5, 2)\ngate = PauliEvolutionGate(op, time=0.5)"),
        code("from classiq import suzuki_trotter\nsuzuki_trotter(pauli_terms, evolution_coefficient=0.5, order=1, repetitions=4, qbv=q)"),
    ], ["ApproxTimeEvolution", "PauliEvolutionGate", "suzuki_trotter"], ["trotter_step"]),
    ("chemistry-lab/trotter/comparison.ipynb", [
        code("import matplotlib.pyplot as plt\nerrors = []\nfor n in range(1, 5):\n    errors.append(trotter_step(n))\nplt.plot(errors)\nplt.show()"),
        code("qml.ApproxTimeEvolution(h, t, 3)"),
    ], ["ApproxTimeEvolution"], ["trotter_step"]),
    ("chemistry-lab/vqe/ground_state.ipynb", [
        md("Ground state search"),
        code("from qiskit.circuit.library import real_amplitudes, efficient_su2\n\nansatz = real_amplitudes(4, reps=2)\nalt = efficient_su2(4)"),
        code("energy = estimator.run([(ansatz, op, params)]).result()"),
    ], ["real_amplitudes", "efficient_su2"], []),
    ("chemistry-lab/vqe/prepared.ipynb", [
        code("from qiskit.circuit.library import StatePreparation\nsp = StatePreparation(vec)\ncircuit.append(sp, range(2))\nstate_prep(vec)"),
        code("from classiq import inplace_prepare_amplitudes\ninplace_prepare_amplitudes(amps, 0.0, q)"),
    ], ["StatePreparation", "inplace_prepare_amplitudes"], ["state_prep"]),
    ("optimization-suite/qaoa/maxcut.ipynb", [
        md("Max-cut"),
        code("from qiskit.circuit.library import QAOAAnsatz\nqaoa = QAOAAnsatz(cost_operator, reps=2)\nqaoa.measure_all()"),
        code("from classiq import qaoa_penalty\nqaoa_penalty(num_layers=3, params=p, x=reg)"),
    ], ["QAOAAnsatz", "qaoa_penalty"], []),
    ("optimization-suite/qaoa/scaling.ipynb", [
        code("for reps in range(1, 4):\n    circuits.append(QAOAAnsatz(cost_operator, reps=reps))"),
        code("depths = [c.decompose().depth() for c in circuits]\nprint(depths)"),
    ], ["QAOAAnsatz"], []),
    ("optimization-suite/grover/search.ipynb", [
        md("Search"),
        code("from classiq import grover_operator, hadamard_transform, phase_oracle\n\nhadamard_transform(x)\nphase_oracle(predicate, x)\ngrover_operator(oracle, hadamard_transform, x)"),
        code("hadamard(x)\ngrover(x)"),
    ], ["grover_operator", "hadamard_transform", "phase_oracle"], ["hadamard", "grover"]),
    ("optimization-suite/grover/amplify.ipynb", [
        code("import pennylane as qml\nqml.AmplitudeAmplification(U, O, iters=3)\nqml.AmplitudeAmplification(U, O, iters=5)"),
        code("from classiq import prepare_uniform_trimmed_state\nprepare_uniform_trimmed_state(5, q)"),
    ], ["AmplitudeAmplification", "prepare_uniform_trimmed_state"], []),
    ("algorithms-zoo/phase/qpe_classiq.ipynb", [
        md("Phase estimation"),
        code("from classiq import qpe, qft\nqpe(unitary=lambda: power_unitary(q), phase=phase_reg)\nqft(phase_reg)\nqft(phase_reg)"),
    ], ["qpe", "qft"], ["qft_inverse"]),
    ("algorithms-zoo/phase/qpe_other.ipynb", [
        code("import pennylane as qml\nfrom qiskit.circuit.library import PhaseEstimation\nqml.QuantumPhaseEstimation(U, estimation_wires=range(3))\npe = PhaseEstimation(3, unitary)"),
        code("qft_inverse(phase_reg)\nphase_shift(0.3)"),
    ], ["QuantumPhaseEstimation", "PhaseEstimation"], ["qft_inverse", "phase_shift"]),
    ("algorithms-zoo/linear/hhl.ipynb", [
        md("Linear systems"),
        code("from qiskit.circuit.library import ExactReciprocal, IntegerComparator\nrec = ExactReciprocal(4, scaling=0.25)\ncmp = IntegerComparator(4, 5)"),
        code("from classiq import lcu, qsvt\nlcu(coefficients, unitaries, block)\nqsvt(phase_seq, proj_a, proj_b, u, aux)"),
    ], ["ExactReciprocal", "IntegerComparator", "lcu", "qsvt"], []),
    ("algorithms-zoo/linear/block_encoding.ipynb", [
        code("import pennylane as qml\nqml.PrepSelPrep(lcu_op, control=[0, 1])\nqml.Adder(3, x_wires=[2, 3, 4])"),
        code("from classiq import modular_increment\nmodular_increment(1, counter)"),
    ], ["PrepSelPrep", "Adder", "modular_increment"], ["modular_add"]),
    ("algorithms-zoo/logic/gates.ipynb", [
        code("from qiskit.circuit.library import OrGate, MCMTGate\nor_gate = OrGate(3)\nmc = MCMTGate(ZGate(), 2, 2)"),
        code("from classiq import apply_to_all, prepare_bell_state\napply_to_all(H, reg)\nprepare_bell_state(0, pair)"),
    ], ["OrGate", "MCMTGate", "apply_to_all", "prepare_bell_state"], ["bell_state"]),
    ("education-notebooks/week1/intro.ipynb", [
        md("Introduction\n\nA first circuit."),
        raw("raw cell text is dropped"),
        code("from classiq import hadamard_transform, prepare_bell_state\nhadamard_transform(q)\nprepare_bell_state(2, pair)"),
    ], ["hadamard_transform", "prepare_bell_state"], []),
    ("education-notebooks/week1/encodings.ipynb", [
        code("from qiskit.circuit.library import ZZFeatureMap\nfm = ZZFeatureMap(feature_dimension=2, reps=1)\nfm.decompose().draw()"),
        code("qml.AngleEmbedding(features, wires=range(2))\nqml.BasisEmbedding(bits, wires=range(3))"),
    ], ["ZZFeatureMap", "AngleEmbedding", "BasisEmbedding"], []),
    ("education-notebooks/week2/finance.ipynb", [
        md("Option pricing"),
        code("from qiskit.circuit.library import LinearAmplitudeFunction\nobjective = LinearAmplitudeFunction(3, slopes, offsets, domain=(0, 7), image=(0, 10))"),
        code("from classiq import qft, qpe\nqft(reg)\nqpe(unitary=u, phase=phase_reg)"),
    ], ["LinearAmplitudeFunction", "qft", "qpe"], []),
    ("education-notebooks/week2/review.ipynb", [
        code("qml.StronglyEntanglingLayers(w, wires=range(2))\nqml.IQPEmbedding(f, wires=range(2))\nqml.PrepSelPrep(op, control=[0])"),
    ], ["StronglyEntanglingLayers", "IQPEmbedding", "PrepSelPrep"], []),
    # Comment block is a verbatim concept summary.
    ("education-notebooks/week2/notes_fourier.ipynb", [
        md(SUMMARY[PATHS["qft"]]),
        code("x = 1\ny = x + 1"),
    ], [], []),
    ("qml-tutorials/notes/embedding_notes.ipynb", [
        code("# " + SUMMARY[PATHS["AmplitudeEmbedding"]] + "\nvalues = [0.5, 0.5, 0.5, 0.5]"),
    ], [], []),
    ("chemistry-lab/notes/evolution_notes.ipynb", [
        md(SUMMARY[PATHS["PauliEvolutionGate"]]),
        code("t = 0.25"),
    ], [], []),
    # Does not parse: the comment channel still runs, calls are not extracted.
    ("algorithms-zoo/broken/syntax_error.ipynb", [
        code("def broken(:\n    qft(x)"),
    ], [], []),
]

MALFORMED = "optimization-suite/broken/truncated.ipynb"


def notebook_json(cells):
    out = []
    for kind, text in cells:
        lines = text.split("\n")
        source = [l + "\n" for l in lines[:-1]] + [lines[-1]]
        cell = {"cell_type": kind, "metadata": {}, "source": source}
        if kind == "code":
            cell["execution_count"] = None
            cell["outputs"] = []
        out.append(cell)
    return {
        "cells": out,
        "metadata": {"kernelspec": {"display_name": "Python 3", "language": "python", "name": "python3"}},
        "nbformat": 4,
        "nbformat_minor": 5,
    }


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    write_csv(os.path.join(HERE, "kb.csv"), ["framework", "concept_path", "summary", "pattern"], KB)

    root = os.path.join(HERE, "notebooks")
    planted, decoys, summaries = [], [], []
    for rel, cells, plants, decoy_names in NOTEBOOKS:
        path = os.path.join(root, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w") as f:
            json.dump(notebook_json(cells), f, indent=1, sort_keys=True)
            f.write("\n")
        script = rel[: -len(".ipynb")] + ".py"
        for name in plants:
            planted.append((script, name, PATHS[name]))
        for name in decoy_names:
            decoys.append((script, name))
        for kind, text in cells:
            body = text[2:] if text.startswith("# ") else text
            if body.split("\n")[0] in SUMMARY.values():
                concept = next(p for p, s in SUMMARY.items() if s == body.split("\n")[0])
                summaries.append((script, concept))
    path = os.path.join(root, MALFORMED)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write('{"cells": [{"cell_type": "code", "source": ["qft(x)"]\n')

    assert len(set(planted)) == len(planted) == 50, len(planted)
    decoy_names = {d[1] for d in decoys}
    assert len(decoy_names) == 10, sorted(decoy_names)
    write_csv(os.path.join(HERE, "planted_calls.csv"), ["file_path", "call_name", "concept_path"], sorted(planted))
    write_csv(os.path.join(HERE, "decoy_calls.csv"), ["file_path", "call_name"], sorted(set(decoys)))
    write_csv(os.path.join(HERE, "summary_plants.csv"), ["file_path", "concept_path"], sorted(summaries))


if __name__ == "__main__":
    main()

"""Two-modality alignment end to end.

Generates paired synthetic features for two modalities, trains linear
encoders with the bidirectional CS projection-matching loss, and shows
cross-modal retrieval improving epoch by epoch.
"""

from dataclasses import replace

from csalign import SynthConfig, TrainConfig, build_encoders, generate_synthetic, train_run

synth = SynthConfig(
    num_classes=6,
    per_class=80,
    input_dims=(48, 24),  # deliberately different feature spaces
    embed_dim=12,
    class_sep=6.0,
    noise_sigma=1.0,
    seed=1,
)
base = TrainConfig(max_epochs=25, batch_size=64, seed=1, loss_kind="bimodal_cs")

data = generate_synthetic(synth)
print(f"two modalities, dims {synth.input_dims} -> shared {synth.embed_dim}-dim space,")
print(f"{synth.num_instances} paired instances over {synth.num_classes} classes\n")

print("epoch   loss     P@1 A->B   P@1 B->A")
encoders = build_encoders(synth.input_dims, synth.embed_dim, base)
trace = train_run(data, encoders, base)
for record in trace.records[::4] + [trace.records[-1]]:
    print(
        f"{record.epoch:5d}  {record.loss:7.4f}   "
        f"{record.metrics['A2B']['p1']:.3f}      {record.metrics['B2A']['p1']:.3f}"
    )
print(f"\nheld-out MAP: A2B {trace.final_metrics['A2B']['map']:.3f}, "
      f"B2A {trace.final_metrics['B2A']['map']:.3f}")

print("\nSame data and budget with the smoothed-KL projection loss:")
encoders_kl = build_encoders(synth.input_dims, synth.embed_dim, base)
trace_kl = train_run(data, encoders_kl, replace(base, loss_kind="kl"))
print(f"  CS : final loss {trace.losses[-1]:8.4f}, min P@1 "
      f"{min(m['p1'] for m in trace.final_metrics.values()):.3f}")
print(f"  KL : final loss {trace_kl.losses[-1]:8.4f}, min P@1 "
      f"{min(m['p1'] for m in trace_kl.final_metrics.values()):.3f}")
print("Both align this easy benchmark; the CS loss does it without a")
print("smoothing constant and with a denominator that cannot vanish.")

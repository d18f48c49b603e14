#pragma once

namespace fedfair::detail {

// Datasheet template, version 1. Placeholders use {{key}}; the renderer
// fails on unknown keys and on record fields that never appear, so this
// file and GenerationRecord must move together.
inline constexpr const char* kDatasheetTemplate = R"(# Dataset datasheet

Generated by fedfair {{library_version}}.

## Task

- Base task: {{base_task}}
- Survey year: {{year}}
- Horizon: {{horizon}}
- States / clients: {{states}}

## Generation parameters

- Partitioner: {{partitioner}}
- Split fractions: {{split_fractions}}
- Master seed: {{seed}}

## Applied modifications

{{modifications_table}}

## Bias threshold rule

{{threshold_rule}}

## Device-level subset sampling

{{device_sampling}}

## Fairness summary

{{fairness_summary}}

Demographic disparity is reported as the maximum pairwise gap between group
positive rates. Signed one-vs-rest gaps per value are reported alongside it,
since the two readings differ for attributes with more than two values; the
pairwise number is the canonical one.

## Configuration

{{config_json}}
)";

}  // namespace fedfair::detail

import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { parseBpmn } from '../src/bpmn';

const referenceXml = readFileSync(join(process.cwd(), 'tests/fixtures/reference.bpmn.xml'), 'utf-8');

describe('BPMN document parsing', () => {
  it('reads every flow node with its diagram bounds', () => {
    const model = parseBpmn(referenceXml);
    const kinds = model.nodes.map((n) => n.kind);
    expect(kinds.filter((k) => k === 'task')).toHaveLength(4);
    expect(kinds.filter((k) => k === 'userTask')).toHaveLength(1);
    expect(kinds.filter((k) => k === 'startEvent')).toHaveLength(2);
    expect(kinds.filter((k) => k === 'endEvent')).toHaveLength(1);
    expect(kinds.filter((k) => k === 'parallelGateway')).toHaveLength(2);
    expect(kinds.filter((k) => k === 'exclusiveGateway')).toHaveLength(1);
    for (const node of model.nodes) {
      expect(Number.isFinite(node.x)).toBe(true);
      expect(node.width).toBeGreaterThan(0);
    }
  });

  it('reads lanes in stage order and edges with waypoints', () => {
    const model = parseBpmn(referenceXml);
    expect(model.lanes.map((l) => l.name)).toEqual(['build', 'test', 'package', 'deploy']);
    expect(model.edges).toHaveLength(11);
    for (const edge of model.edges) {
      expect(edge.points.length).toBeGreaterThanOrEqual(2);
    }
  });

  it('keeps typed start events and activity documentation', () => {
    const model = parseBpmn(referenceXml);
    const push = model.nodes.find((n) => n.id === 'start_push');
    const mr = model.nodes.find((n) => n.id === 'start_merge_request');
    expect(push?.eventDefinition).toBe('signal');
    expect(mr?.eventDefinition).toBe('message');
    const compile = model.nodes.find((n) => n.id === 'task_compile');
    expect(compile?.documentation).toContain('mvn compile');
  });
});
